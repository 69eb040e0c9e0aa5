import numpy as np
import pytest

from app.exceptions import DomainError, LedgerError
from app.models.token import LedgerState, MonetaryPolicy
from app.services.token_market_service import TokenMarketService

service = TokenMarketService()


def test_price_above_the_floor_means_no_speculation():
    result = service.clear_market(0.3, 1.0, beta=0.5, tau=0.0, p_next_expected=0.4)
    assert result.price == pytest.approx(0.3)
    assert result.speculative_demand == pytest.approx(0.0)
    assert result.tokens_paid == pytest.approx(1.0)


def test_binding_floor_creates_speculative_demand():
    result = service.clear_market(0.1, 1.0, beta=0.5, tau=0.0, p_next_expected=0.4)
    assert result.price == pytest.approx(0.2)
    assert result.speculative_demand == pytest.approx(0.5)
    assert result.tokens_paid == pytest.approx(0.5)


def test_terminal_period_has_no_floor():
    result = service.clear_market(0.4, 2.0, beta=0.9, tau=0.0, p_next_expected=0.0)
    assert result.price == pytest.approx(0.2)
    assert result.speculative_demand == 0.0


def test_zero_payment_and_zero_floor_is_flagged():
    result = service.clear_market(0.0, 1.0, beta=0.9, tau=0.0, p_next_expected=0.0)
    assert result.degenerate
    assert result.price == 0.0
    assert result.speculative_demand == 1.0


def test_nonpositive_stock_is_rejected():
    with pytest.raises(DomainError):
        service.clear_market(0.3, 0.0, beta=0.9, tau=0.0, p_next_expected=0.1)


@pytest.mark.parametrize('B, sigma, expected', [
    (0.25, -1.0, 0.55),
    (0.3, 0.0, 0.3),
    (0.1, 0.0, 0.3),
    (0.1, 3.0, 0.1),
])
def test_market_cap_fixed_point(B, sigma, expected):
    assert service.market_cap_fixed_point(B, sigma, beta=0.5, P_next=0.6) == pytest.approx(expected)


def test_speculation_condition():
    assert service.speculation_active(0.1, 0.0, beta=0.5, P_next=0.6)
    assert not service.speculation_active(0.1, 3.0, beta=0.5, P_next=0.6)


@pytest.mark.parametrize('sigma', [-1.0, -0.5, 0.0, 2.0])
@pytest.mark.parametrize('tau', [0.0, 1.0, -0.5])
def test_clearing_price_matches_the_fixed_point(sigma, tau):
    rng = np.random.default_rng(4)
    B = rng.uniform(0.0, 1.0, size=500)
    beta, P_next, M = 0.9, 0.7, 2.0
    X = service.market_cap_fixed_point(B, sigma, beta, P_next)
    tokens_paid = B * M / X
    next_stock = (1 + tau) * (M + sigma * tokens_paid)
    result = service.clear_market(B, M, beta, tau, P_next / next_stock)
    np.testing.assert_allclose(result.price, X / M, atol=1e-9)


def test_apply_policy_burns_revenue():
    ledger = LedgerState.initial(1.0, 2)
    nxt = service.apply_policy(ledger, 0.5, np.array([[0.25, 0.25]]), tau=0.0, sigma=-1.0)
    assert nxt.t == 2
    assert nxt.A[0] == pytest.approx(0.0)
    assert nxt.M[0] == pytest.approx(0.5)


def test_apply_policy_keeps_per_path_shapes_with_scalar_payment():
    ledger = LedgerState.initial(1.0, 2, paths=3)
    nxt = service.apply_policy(ledger, 0.5, np.full((3, 2), 0.1), tau=0.0, sigma=0.0)
    assert nxt.A.shape == nxt.M.shape == (3,)
    assert nxt.holdings.shape == (3, 2)
    np.testing.assert_allclose(nxt.A, 0.5)
    np.testing.assert_allclose(nxt.feasibility_gap(), 0.0, atol=1e-12)


def test_apply_policy_scales_with_tau_and_sigma():
    ledger = LedgerState.initial(1.0, 2)
    nxt = service.apply_policy(ledger, 0.6, np.array([[0.2, 0.2]]), tau=1.0, sigma=0.5)
    assert nxt.A[0] == pytest.approx(1.8)
    np.testing.assert_allclose(nxt.holdings, [[0.4, 0.4]])
    assert nxt.M[0] == pytest.approx(2.6)
    np.testing.assert_allclose(nxt.feasibility_gap(), 0.0, atol=1e-12)


def test_stock_follows_the_policy_identity():
    ledger = LedgerState.initial(3.0, 3)
    paid = np.array([1.2])
    holdings = service.split_speculation(np.array([1.8]), 3)
    tau, sigma = 0.25, 2.0
    nxt = service.apply_policy(ledger, paid, holdings, tau, sigma)
    assert nxt.M[0] == pytest.approx((1 + tau) * (3.0 + sigma * 1.2))


def test_overdrawn_ledger_is_rejected():
    ledger = LedgerState.initial(1.0, 2)
    with pytest.raises(LedgerError):
        service.apply_policy(ledger, 0.8, np.array([[0.2, 0.2]]), tau=0.0, sigma=0.0)


def test_policy_rejects_sigma_below_minus_one():
    with pytest.raises(DomainError):
        MonetaryPolicy.from_vectors([0.0], [-1.5])
    with pytest.raises(DomainError):
        MonetaryPolicy.from_vectors([0.0, 0.0], [0.0])
