import dataclasses
import math

import numpy as np
import pytest

from conftest import kernel_copula
from oracles import bs_call_quadrature, lognormal_product_mean, quanto_practitioner_reference
from quanto.errors import DomainError
from quanto.heston import SMOKE_PATHS, DswParams, SimGrid, simulate_dsw_joint, simulate_heston_terminal
from quanto.marginals import marginal_from_samples
from quanto.market import REFERENCE_MARKET, ContractSpec, HestonParams, MarketConfig
from quanto.pricing import (PriceResult, foreign_measure_price, price_copula, price_copula_strikes, price_dsw,
                            price_practitioner, quanto_adjusted_spot)

FLAT = HestonParams(0.0, 0.0, 0.0, 0.2, 0.0)
VOL = math.sqrt(0.2)
STRIKES = np.linspace(1250.0, 3750.0, 11)


def combined(a: PriceResult, b: PriceResult) -> float:
    return abs(a.price - b.price) / math.hypot(a.std_error, b.std_error)


@pytest.fixture(scope="module")
def flat_marginals():
    mkt, T = REFERENCE_MARKET, 3.0
    grid = SimGrid.for_maturity(T, SMOKE_PATHS)
    s = simulate_heston_terminal(mkt.s0, FLAT, mkt.rf, T, dataclasses.replace(grid, seed=21))
    q = simulate_heston_terminal(mkt.qinv0, FLAT, mkt.rf - mkt.r, T, dataclasses.replace(grid, seed=22))
    return marginal_from_samples(s), marginal_from_samples(q)


# ---------------------------------------------------------------- practitioner


def test_practitioner_reduces_to_black_scholes():
    mkt = MarketConfig(0.0, 1.3, 100.0, 0.03, 0.03, 2.0)
    got = price_practitioner(mkt, ContractSpec(110.0, 2.0), 0.3, 0.1, 0.25)
    assert got.price == pytest.approx(2.0 * bs_call_quadrature(100.0, 110.0, 0.25, 2.0, 0.03), abs=1e-8)
    assert got.std_error == 0.0


def test_practitioner_zero_strike_vol():
    mkt, c = REFERENCE_MARKET, ContractSpec(1500.0, 3.0)
    spot = quanto_adjusted_spot(mkt, 3.0, VOL, VOL)
    got = price_practitioner(mkt, c, VOL, VOL, 0.0).price
    assert got == pytest.approx(3.0 * max(spot - 1500.0 * math.exp(-0.3), 0.0), abs=1e-9)


def test_practitioner_table_reference():
    got = price_practitioner(REFERENCE_MARKET, ContractSpec(2500.0, 3.0), VOL, VOL, VOL).price
    ref = quanto_practitioner_reference(2500.0, 2500.0, 3.0, 0.1, 0.01, -0.7, VOL, VOL, VOL, 3.0)
    assert got == pytest.approx(ref, abs=1e-8)


def test_practitioner_rejects_bad_vol():
    with pytest.raises(DomainError):
        price_practitioner(REFERENCE_MARKET, ContractSpec(2500.0, 3.0), -0.1, VOL, VOL)


# ------------------------------------------------------------------------ DSW


def test_dsw_near_zero_strike_against_lognormal_moment():
    mkt, T = REFERENCE_MARKET, 3.0
    res = price_dsw(mkt, ContractSpec(1e-9, T), DswParams.from_market(mkt, FLAT, FLAT),
                    SimGrid.for_maturity(T, SMOKE_PATHS, seed=3))
    var = 0.2 * T
    moment = lognormal_product_mean(math.log(mkt.s0) + (mkt.rf - 0.1) * T,
                                    math.log(mkt.qinv0) + (mkt.rf - mkt.r - 0.1) * T,
                                    math.sqrt(var), math.sqrt(var), mkt.rho_sf_qinv)
    expected = mkt.q_fix * mkt.q0 * math.exp(-mkt.rf * T) * moment
    assert abs(res.price - expected) < 3 * res.std_error


def test_dsw_flat_case_matches_practitioner():
    mkt, T = REFERENCE_MARKET, 3.0
    params = DswParams.from_market(mkt, FLAT, FLAT)
    for k in (1500.0, 2500.0, 3500.0):
        d = price_dsw(mkt, ContractSpec(k, T), params, SimGrid.for_maturity(T, SMOKE_PATHS, seed=4))
        p = price_practitioner(mkt, ContractSpec(k, T), VOL, VOL, VOL)
        assert abs(d.price - p.price) < 3 * d.std_error


def test_dsw_path_doubling_is_consistent():
    mkt, T = REFERENCE_MARKET, 3.0
    params = DswParams.from_market(mkt, HestonParams(-0.7, 1, 0.1, 0.2, 0.5), HestonParams(-0.7, 1, 0.1, 0.2, 0.5))
    a = price_dsw(mkt, ContractSpec(2500.0, T), params, SimGrid.for_maturity(T, 10_000, seed=5))
    b = price_dsw(mkt, ContractSpec(2500.0, T), params, SimGrid.for_maturity(T, 20_000, seed=5))
    assert combined(a, b) < 3


def test_foreign_measure_kernel_validation():
    c = ContractSpec(1.0, 1.0)
    with pytest.raises(DomainError):
        foreign_measure_price(REFERENCE_MARKET, c, [1.0], [1.0])
    with pytest.raises(DomainError):
        foreign_measure_price(REFERENCE_MARKET, c, [1.0, 2.0], [1.0])


def test_price_result_validation():
    with pytest.raises(DomainError):
        PriceResult(-1.0, 0.0, 1)
    with pytest.raises(DomainError):
        PriceResult(1.0, -1e-3, 1)
    assert str(PriceResult(1.5, 0.0, 0)) == "price=1.5 se=0.0"


# --------------------------------------------------------------------- copula


def test_copula_prices_nonnegative_and_nonincreasing(flat_marginals):
    res = price_copula_strikes(REFERENCE_MARKET, STRIKES, 3.0, *flat_marginals, kernel_copula("gaussian", -0.7),
                               SMOKE_PATHS, seed=6, n_boot=0)
    prices = np.array([r.price for r in res])
    se = np.array([r.std_error for r in res])
    assert np.all(prices >= 0)
    assert np.all(np.diff(prices) <= 3 * se[1:])


def test_gaussian_copula_matches_flat_dsw(flat_marginals):
    mkt, T = REFERENCE_MARKET, 3.0
    cop = price_copula_strikes(mkt, STRIKES, T, *flat_marginals, kernel_copula("gaussian", -0.7),
                               SMOKE_PATHS, seed=7)
    s, q = simulate_dsw_joint(mkt.s0, mkt.qinv0, DswParams.from_market(mkt, FLAT, FLAT), T,
                              SimGrid.for_maturity(T, SMOKE_PATHS, seed=8))
    for k, c in zip(STRIKES, cop):
        assert combined(c, foreign_measure_price(mkt, ContractSpec(k, T), s, q)) < 3


def test_single_strike_wrapper_matches_batch(flat_marginals):
    cop = kernel_copula("gaussian", -0.7)
    one = price_copula(REFERENCE_MARKET, ContractSpec(2500.0, 3.0), *flat_marginals, cop, 5_000, seed=9)
    batch = price_copula_strikes(REFERENCE_MARKET, [2500.0], 3.0, *flat_marginals, cop, 5_000, seed=9)[0]
    assert one == batch


def test_copula_rejects_zero_draws(flat_marginals):
    with pytest.raises(DomainError):
        price_copula(REFERENCE_MARKET, ContractSpec(2500.0, 3.0), *flat_marginals, kernel_copula("gaussian", -0.7), 0)


def test_q_fix_scales_all_pricers(flat_marginals):
    mkt, T = REFERENCE_MARKET, 3.0
    mkt2 = dataclasses.replace(mkt, q_fix=7.5)
    c = ContractSpec(2600.0, T)
    ratio = 7.5 / mkt.q_fix
    p1 = price_practitioner(mkt, c, VOL, VOL, VOL).price
    assert price_practitioner(mkt2, c, VOL, VOL, VOL).price == pytest.approx(ratio * p1, rel=1e-14)
    params = DswParams.from_market(mkt, FLAT, FLAT)
    grid = SimGrid.for_maturity(T, 5_000, seed=10)
    assert price_dsw(mkt2, c, params, grid).price == pytest.approx(ratio * price_dsw(mkt, c, params, grid).price,
                                                                   rel=1e-12)
    cop = kernel_copula("gaussian", -0.7)
    a = price_copula(mkt, c, *flat_marginals, cop, 5_000, seed=11, n_boot=0)
    b = price_copula(mkt2, c, *flat_marginals, cop, 5_000, seed=11, n_boot=0)
    assert b.price == pytest.approx(ratio * a.price, rel=1e-12)
