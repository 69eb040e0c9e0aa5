import numpy as np
import pytest

from app.exceptions import DomainError
from app.models.token import MonetaryPolicy
from app.models.valuation import ValuationDistribution
from app.services.accounting_service import annuity_factor
from app.services.equilibrium_service import MONTE_CARLO, EquilibriumService

service = EquilibriumService()


def test_single_period_price_is_expected_payment(unit_uniform):
    profile = service.solve_backward(unit_uniform, 2, 1, 0.9, MonetaryPolicy.constant(1))
    assert profile.market_caps.tolist() == pytest.approx([1 / 3], abs=1e-12)
    assert profile.market_cap(2) == 0.0


def test_burn_then_neutral_two_periods(unit_uniform):
    policy = MonetaryPolicy.from_vectors([0.0, 0.0], [-1.0, 0.0])
    profile = service.solve_backward(unit_uniform, 2, 2, 0.9, policy)
    assert profile.market_cap(1) == pytest.approx(1 / 3 + 0.9 / 3, abs=1e-9)
    assert profile.speculation_probability[0] == 1.0


def test_large_expansion_never_speculates(shifted_uniform):
    policy = MonetaryPolicy.from_vectors([0.0, 0.0], [1.0, 0.0])
    profile = service.solve_backward(shifted_uniform, 2, 2, 0.9, policy)
    assert profile.market_cap(1) == pytest.approx(4 / 3, abs=1e-9)
    assert profile.speculation_probability[0] == 0.0


def test_full_burn_telescopes_to_the_annuity(unit_uniform):
    profile = service.solve_backward(unit_uniform, 2, 5, 0.9, MonetaryPolicy.constant(5, sigma=-1.0))
    assert profile.market_cap(1) == pytest.approx(annuity_factor(0.9, 5) / 3, abs=1e-9)


def test_expected_price_divides_by_stock(unit_uniform):
    profile = service.solve_backward(unit_uniform, 2, 2, 0.9, MonetaryPolicy.constant(2))
    assert service.expected_price(profile, 1, 4.0) == pytest.approx(profile.market_cap(1) / 4.0)
    assert service.expected_price(profile, 3, 2.0) == 0.0
    with pytest.raises(DomainError):
        service.expected_price(profile, 1, 0.0)
    with pytest.raises(DomainError):
        service.expected_price(profile, 4, 1.0)


@pytest.mark.parametrize('horizon, sigma, expected', [
    (1, [0.0], [1.25]),
    (2, [-1.0, -1.0], [1.875, 1.25]),
])
def test_discrete_oracle_examples(two_atoms, horizon, sigma, expected):
    policy = MonetaryPolicy.from_vectors([0.0] * horizon, sigma)
    profile = service.solve_discrete_oracle(two_atoms, 2, horizon, 0.5, policy)
    np.testing.assert_allclose(profile.market_caps, expected, atol=1e-12)


def test_point_mass_prices_are_flat():
    dist = ValuationDistribution.discrete([(1.0, 1.0)])
    profile = service.solve_discrete_oracle(dist, 2, 3, 0.9, MonetaryPolicy.constant(3))
    np.testing.assert_allclose(profile.market_caps, [1.0, 1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize('sigma', [
    [0.0, 0.0, 0.0],
    [-1.0, -1.0, -1.0],
    [-0.5, 2.0, 0.0],
    [3.0, -1.0, 0.5],
])
@pytest.mark.parametrize('n', [2, 3])
def test_quadrature_matches_enumeration(sigma, n):
    dist = ValuationDistribution.discrete([(0.5, 0.2), (1.0, 0.3), (3.0, 0.5)])
    policy = MonetaryPolicy.from_vectors([0.0] * 3, sigma)
    fast = service.solve_backward(dist, n, 3, 0.8, policy)
    exact = service.solve_discrete_oracle(dist, n, 3, 0.8, policy)
    np.testing.assert_allclose(fast.market_caps, exact.market_caps, atol=1e-9)
    np.testing.assert_allclose(fast.speculation_probability, exact.speculation_probability, atol=1e-12)


def test_monte_carlo_matches_quadrature(unit_uniform):
    policy = MonetaryPolicy.from_vectors([0.0] * 3, [-0.5, 0.0, 2.0])
    exact = service.solve_backward(unit_uniform, 2, 3, 0.9, policy)
    estimate = service.solve_backward(unit_uniform, 2, 3, 0.9, policy, method=MONTE_CARLO,
                                      paths=200_000, seed=31)
    tolerance = 4 * np.sqrt(np.sum(estimate.standard_errors ** 2))
    assert np.all(np.abs(estimate.market_caps - exact.market_caps) <= tolerance)


def test_monte_carlo_is_reproducible(unit_uniform):
    policy = MonetaryPolicy.constant(2)
    first = service.solve_backward(unit_uniform, 2, 2, 0.9, policy, method=MONTE_CARLO, paths=5000, seed=3)
    second = service.solve_backward(unit_uniform, 2, 2, 0.9, policy, method=MONTE_CARLO, paths=5000, seed=3)
    np.testing.assert_array_equal(first.market_caps, second.market_caps)


def test_market_cap_falls_as_sigma_rises(unit_uniform):
    caps = [
        service.solve_backward(unit_uniform, 2, 2, 0.9, MonetaryPolicy.from_vectors([0.0, 0.0], [s, 0.0]))
        .market_cap(1)
        for s in np.linspace(-1.0, 3.0, 9)
    ]
    assert np.all(np.diff(caps) <= 1e-12)
    assert min(caps) >= 1 / 3 - 1e-12


def test_tau_does_not_move_market_caps(unit_uniform):
    neutral = service.solve_backward(unit_uniform, 2, 3, 0.9, MonetaryPolicy.from_vectors([0, 0, 0], [0, -1, 1]))
    scaled = service.solve_backward(unit_uniform, 2, 3, 0.9, MonetaryPolicy.from_vectors([2, -0.5, 0], [0, -1, 1]))
    np.testing.assert_array_equal(neutral.market_caps, scaled.market_caps)


def test_policy_length_must_match_horizon(unit_uniform):
    with pytest.raises(DomainError):
        service.solve_backward(unit_uniform, 2, 3, 0.9, MonetaryPolicy.constant(2))


def test_oracle_rejects_large_instances(two_atoms):
    with pytest.raises(DomainError):
        service.solve_discrete_oracle(two_atoms, 5, 2, 0.5, MonetaryPolicy.constant(2))


def test_beta_outside_unit_interval_is_rejected(unit_uniform):
    with pytest.raises(DomainError):
        service.solve_backward(unit_uniform, 2, 2, 1.0, MonetaryPolicy.constant(2))
