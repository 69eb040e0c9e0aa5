import numpy as np
import pandas as pd
import pytest

from app.exceptions import DomainError, NumericalError
from app.models.token import MonetaryPolicy
from app.models.valuation import MonteCarloEstimate
from app.services.accounting_service import annuity_factor
from app.services.equilibrium_service import EquilibriumService
from app.services.simulation_service import SimulationService

equilibrium = EquilibriumService()
service = SimulationService()

BETA = 0.9
PATHS = 100_000


def token_trace(dist, sigma, tau=None, n=2, M1=1.0, paths=PATHS, seed=2024):
    horizon = len(sigma)
    policy = MonetaryPolicy.from_vectors(tau or [0.0] * horizon, sigma)
    profile = equilibrium.solve_backward(dist, n, horizon, BETA, policy)
    return profile, service.simulate_token_auction(profile, dist, n, horizon, M1, paths, seed)


def test_single_period_token_revenue_is_the_payment(unit_uniform):
    _, trace = token_trace(unit_uniform, [0.0], paths=1000)
    np.testing.assert_allclose(trace.revenue[:, 0], trace.total_payment[:, 0], atol=1e-12)
    np.testing.assert_allclose(trace.price[:, 0], trace.total_payment[:, 0], atol=1e-12)


def test_full_burn_moves_all_revenue_to_the_first_period(unit_uniform):
    _, trace = token_trace(unit_uniform, [-1.0, -1.0], paths=5000)
    assert np.all(trace.revenue[:, 1] == 0.0)
    np.testing.assert_allclose(trace.revenue[:, 0], trace.total_payment[:, 0] + BETA / 3, atol=1e-9)


def test_full_burn_matches_equity_path_by_path(unit_uniform):
    _, tokens = token_trace(unit_uniform, [-1.0, -1.0, -1.0], paths=5000, seed=8)
    equity = service.simulate_equity_benchmark(unit_uniform, 2, 3, BETA, 5000, 8)
    np.testing.assert_allclose(tokens.revenue, equity.revenue, atol=1e-9)


def test_large_expansion_reproduces_dollar_revenue(shifted_uniform):
    _, trace = token_trace(shifted_uniform, [50.0, 50.0, 0.0], paths=5000)
    assert np.all(trace.speculative_demand == 0.0)
    np.testing.assert_allclose(trace.revenue, trace.total_payment, rtol=1e-12)


def test_dollar_pdv_matches_annuity(unit_uniform):
    trace = service.simulate_dollar_auction(unit_uniform, 2, 3, PATHS, 11)
    estimate = MonteCarloEstimate.from_samples(trace.pdv_revenue(BETA))
    assert estimate.within(annuity_factor(BETA, 3) / 3, sigmas=4)


@pytest.mark.parametrize('sigma', [
    [-1.0, -1.0, -1.0],
    [0.0, 0.0, 0.0],
    [2.0, 2.0, 2.0],
    [-1.0, 0.0, 2.0],
    [-0.5, 3.0, 0.0],
])
def test_token_pdv_matches_dollar_pdv(unit_uniform, sigma):
    _, trace = token_trace(unit_uniform, sigma)
    estimate = MonteCarloEstimate.from_samples(trace.pdv_revenue(BETA))
    assert estimate.within(annuity_factor(BETA, 3) / 3, sigmas=4)


def test_bidder_value_matches_surplus_annuity(unit_uniform):
    _, trace = token_trace(unit_uniform, [-0.5, 1.0, 0.0])
    per_bidder = trace.pdv_bidder_payoff(BETA)
    for bidder in range(per_bidder.shape[1]):
        estimate = MonteCarloEstimate.from_samples(per_bidder[:, bidder])
        assert estimate.within(annuity_factor(BETA, 3) / 6, sigmas=4)


def test_speculation_only_when_the_floor_binds(unit_uniform):
    _, trace = token_trace(unit_uniform, [0.0, 0.0, 0.0], paths=20_000)
    assert np.all(trace.price >= trace.price_floor - 1e-12)
    binding = trace.total_payment / trace.stock < trace.price_floor
    np.testing.assert_array_equal(trace.speculative_demand > 0, binding)


def test_ledger_stays_feasible(unit_uniform):
    _, trace = token_trace(unit_uniform, [-0.5, 2.0, 0.0], tau=[1.0, 0.0, -0.5], paths=5000)
    total = trace.auctioneer_tokens + trace.bidder_tokens.sum(axis=-1)
    np.testing.assert_allclose(total, trace.stock, rtol=1e-12)


def test_tau_changes_prices_but_not_revenue(unit_uniform):
    _, neutral = token_trace(unit_uniform, [0.0, -0.5, 1.0], tau=[0.0, 0.0, 0.0], paths=5000)
    _, scaled = token_trace(unit_uniform, [0.0, -0.5, 1.0], tau=[1.0, -0.5, 3.0], paths=5000)
    np.testing.assert_allclose(neutral.revenue, scaled.revenue, atol=1e-9)
    assert not np.allclose(neutral.price[:, 1:], scaled.price[:, 1:])


def test_initial_stock_only_rescales_prices(unit_uniform):
    _, unit = token_trace(unit_uniform, [0.0, 1.0], paths=5000)
    _, large = token_trace(unit_uniform, [0.0, 1.0], M1=1000.0, paths=5000)
    np.testing.assert_allclose(large.price * 1000.0, unit.price, rtol=1e-9)
    np.testing.assert_allclose(large.revenue, unit.revenue, atol=1e-9)


def test_same_seed_same_trace(unit_uniform):
    _, first = token_trace(unit_uniform, [-1.0, 0.0, 2.0], paths=2000, seed=5)
    _, second = token_trace(unit_uniform, [-1.0, 0.0, 2.0], paths=2000, seed=5)
    pd.testing.assert_frame_equal(first.to_frame(), second.to_frame())


def test_regimes_share_the_valuation_panel(unit_uniform):
    _, tokens = token_trace(unit_uniform, [0.0, 0.0], paths=2000, seed=21)
    dollars = service.simulate_dollar_auction(unit_uniform, 2, 2, 2000, 21)
    np.testing.assert_array_equal(tokens.valuations, dollars.valuations)
    np.testing.assert_array_equal(tokens.total_payment, dollars.revenue)


def test_profile_must_match_the_configuration(unit_uniform, shifted_uniform):
    profile = equilibrium.solve_backward(unit_uniform, 2, 2, BETA, MonetaryPolicy.constant(2))
    with pytest.raises(DomainError):
        service.simulate_token_auction(profile, shifted_uniform, 2, 2, 1.0, 100, 0)
    with pytest.raises(DomainError):
        service.simulate_token_auction(profile, unit_uniform, 3, 2, 1.0, 100, 0)


def test_exhausted_stock_is_a_numerical_failure(unit_uniform):
    with pytest.raises(NumericalError):
        token_trace(unit_uniform, [0.0, 0.0], tau=[-1.0, 0.0], paths=100)
