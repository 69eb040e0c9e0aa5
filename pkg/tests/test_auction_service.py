import itertools

import numpy as np
import pytest

from app.exceptions import DomainError, UnsupportedFormatError
from app.models.auction import FIRST_PRICE, SECOND_PRICE, AuctionFormat
from app.models.valuation import ValuationDistribution
from app.services.auction_service import AuctionService
from app.services.valuation_service import ValuationService

service = AuctionService()
second_price = AuctionFormat(SECOND_PRICE)
first_price = AuctionFormat(FIRST_PRICE)


def test_second_price_winner_pays_second_highest():
    outcome = service.run_auction(second_price, [0.8, 0.3])
    assert outcome.winner == 0
    assert outcome.payments == [0.3, 0.0]
    assert outcome.total_payment == pytest.approx(0.3)


def test_ties_go_to_the_lowest_index():
    outcome = service.run_auction(second_price, [0.5, 0.5])
    assert outcome.winner == 0
    assert outcome.total_payment == pytest.approx(0.5)


def test_reserve_sets_the_price_floor():
    reserved = AuctionFormat(SECOND_PRICE, reserve=0.5)
    outcome = service.run_auction(reserved, [0.8, 0.3])
    assert outcome.winner == 0
    assert outcome.total_payment == pytest.approx(0.5)

    empty = service.run_auction(reserved, [0.4, 0.3])
    assert empty.winner is None
    assert empty.total_payment == 0.0


def test_first_price_uniform_bids_half_the_value(unit_uniform):
    outcome = service.run_auction(first_price, [0.8, 0.3], unit_uniform)
    assert outcome.winner == 0
    assert outcome.total_payment == pytest.approx(0.4, abs=1e-12)


def test_first_price_needs_the_distribution():
    with pytest.raises(DomainError):
        service.run_auction(first_price, [0.8, 0.3])


@pytest.mark.parametrize('valuations', [[], [0.4]])
def test_degenerate_inputs_are_rejected(valuations):
    with pytest.raises(DomainError):
        service.run_auction(second_price, valuations)


@pytest.mark.parametrize('n, v', [(2, 0.8), (3, 0.9), (4, 0.35)])
def test_closed_form_bid_matches_quadrature(unit_uniform, n, v):
    closed = service.fpa_equilibrium_bid(unit_uniform, n, v)
    assert closed == pytest.approx(service.fpa_bid_by_quadrature(unit_uniform, n, v), abs=1e-9)
    assert closed == pytest.approx((n - 1) / n * v, abs=1e-12)


def test_bid_at_the_bottom_of_the_support(shifted_uniform):
    assert service.fpa_equilibrium_bid(shifted_uniform, 2, 1.0) == pytest.approx(1.0)


def test_bids_are_nondecreasing(shifted_uniform):
    grid = np.linspace(1.0, 2.0, 101)
    bids = service.fpa_equilibrium_bid(shifted_uniform, 3, grid)
    assert np.all(np.diff(bids) >= -1e-15)
    assert np.all(bids <= grid + 1e-15)


def test_first_price_with_atoms_is_unsupported(two_atoms):
    with pytest.raises(UnsupportedFormatError):
        service.fpa_equilibrium_bid(two_atoms, 2, 1.0)


def test_winner_has_the_highest_valuation(unit_uniform):
    values = ValuationService().sample_valuations(unit_uniform, 4, np.random.default_rng(3), size=1000)
    for auction_format in (second_price, first_price):
        batch = service.run_auction_batch(auction_format, values, unit_uniform)
        winners = batch.winners
        np.testing.assert_array_equal(values[np.arange(1000), winners], values.max(axis=-1))


@pytest.mark.parametrize('n, expected', [(2, 1 / 3), (3, 1 / 2)])
@pytest.mark.parametrize('kind', [SECOND_PRICE, FIRST_PRICE])
def test_revenue_equivalence_uniform(unit_uniform, kind, n, expected):
    estimate = service.expected_revenue(AuctionFormat(kind), unit_uniform, n, 200_000, np.random.default_rng(17))
    assert estimate.within(expected, sigmas=4)


def test_first_price_bid_with_reserve_above_the_support(unit_uniform, shifted_uniform):
    # uniforme(0,1), n=2: b(v) = (v^2 + r^2) / (2v)
    assert service.fpa_equilibrium_bid(unit_uniform, 2, 0.8, reserve=0.5) == pytest.approx(0.55625, abs=1e-12)
    assert service.fpa_equilibrium_bid(unit_uniform, 2, 0.5, reserve=0.5) == pytest.approx(0.5, abs=1e-12)
    assert service.fpa_equilibrium_bid(shifted_uniform, 2, 1.8, reserve=1.3) == pytest.approx(1.45625, abs=1e-12)
    assert service.fpa_equilibrium_bid(unit_uniform, 3, 0.9, reserve=0.6) == pytest.approx(0.9 - (0.729 - 0.216) / 2.43,
                                                                                           abs=1e-12)


@pytest.mark.parametrize('dist_name, reserve, expected', [
    ('unit_uniform', 0.5, 1 / 3 + 0.25 - 4 * 0.125 / 3),
    ('shifted_uniform', 1.3, 4 * (1 - 0.3 ** 3) / 3),
])
@pytest.mark.parametrize('kind', [SECOND_PRICE, FIRST_PRICE])
def test_revenue_equivalence_with_reserve(request, dist_name, reserve, expected, kind):
    dist = request.getfixturevalue(dist_name)
    estimate = service.expected_revenue(AuctionFormat(kind, reserve=reserve), dist, 2, 200_000,
                                        np.random.default_rng(23))
    assert estimate.within(expected, sigmas=4)


@pytest.mark.parametrize('auction_format', [second_price, first_price])
def test_single_point_mass_revenue_is_exact(auction_format):
    dist = ValuationDistribution.uniform(1.0, 1.0)
    estimate = service.expected_revenue(auction_format, dist, 3, 10_000, np.random.default_rng(0))
    assert estimate.mean == 1.0
    assert estimate.standard_error == 0.0


def test_revenue_requires_enough_paths(unit_uniform):
    with pytest.raises(DomainError):
        service.expected_revenue(second_price, unit_uniform, 2, 100, np.random.default_rng(0))


def test_truthful_bidding_is_dominant_in_second_price():
    atoms = [0.0, 0.5, 1.0]
    grid = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5]
    for profile in itertools.product(atoms, repeat=3):
        for bidder in range(3):
            assert service.best_deviation_gain(second_price, profile, bidder, grid) <= 1e-12
