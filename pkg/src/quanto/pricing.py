"""Quanto call pricers: the practitioners' closed form, coupled Heston (DSW) and kernel copula.

All prices are in DOM currency. The two Monte Carlo pricers share
:func:`foreign_measure_price`, which averages
``Q(0) e^{-rf T} Q^{-1}(T) q_fix max(S_f(T) - K, 0)`` over joint terminal draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blackscholes import BsQuote, bs_call
from . import _rng
from .copula import KernelCopula, copula_sample
from .errors import DomainError
from .heston import DswParams, SimGrid, simulate_dsw_joint
from .marginals import EmpiricalMarginal, quantile
from .market import ContractSpec, MarketConfig, quanto_payoff, rho_domestic_from_foreign

DEFAULT_DRAWS = 200_000
MARGINAL_SAMPLES = 200_000
MARGINAL_BOOTSTRAP = 40


@dataclass(frozen=True)
class PriceResult:
    price: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if not self.price >= 0:
            raise DomainError(f"price must be non-negative, got {self.price}")
        if not self.std_error >= 0:
            raise DomainError(f"std_error must be non-negative, got {self.std_error}")

    def __str__(self) -> str:
        return f"price={self.price!r} se={self.std_error!r}"


def _check_vol(name: str, v: float) -> float:
    v = float(v)
    if not (math.isfinite(v) and v >= 0):
        raise DomainError(f"{name} must be a non-negative finite volatility, got {v}")
    return v


def quanto_adjusted_spot(mkt: MarketConfig, maturity: float, vol_sf_atm: float, vol_q_atm: float) -> float:
    """``S_f(0) exp(-T (r - rf + rho(S_f, Q) sigma_S sigma_Q))`` with at-the-money vols."""
    rho_sq = rho_domestic_from_foreign(mkt.rho_sf_qinv)
    return mkt.s0 * math.exp(-maturity * (mkt.r - mkt.rf + rho_sq * vol_sf_atm * vol_q_atm))


def price_practitioner(mkt: MarketConfig, contract: ContractSpec, vol_sf_atm: float, vol_q_atm: float,
                       vol_sf_strike: float) -> PriceResult:
    """Closed-form practitioners' price.

    The drift adjustment uses at-the-money vols only, so the implied quanto
    forward does not depend on the strike; the Black-Scholes vol slot takes the
    at-strike vol of the asset.
    """
    vol_sf_atm = _check_vol("vol_sf_atm", vol_sf_atm)
    vol_q_atm = _check_vol("vol_q_atm", vol_q_atm)
    vol_sf_strike = _check_vol("vol_sf_strike", vol_sf_strike)
    spot = quanto_adjusted_spot(mkt, contract.maturity, vol_sf_atm, vol_q_atm)
    value = mkt.q_fix * bs_call(BsQuote(spot, contract.strike, vol_sf_strike, contract.maturity, mkt.r))
    return PriceResult(value, 0.0, 0)


def foreign_measure_price(mkt: MarketConfig, contract: ContractSpec, s_f_T, qinv_T) -> PriceResult:
    """Monte Carlo estimate of the DOM price from joint foreign-measure terminal draws."""
    s_f_T = np.asarray(s_f_T, dtype=float)
    qinv_T = np.asarray(qinv_T, dtype=float)
    if s_f_T.shape != qinv_T.shape or s_f_T.ndim != 1 or s_f_T.size < 2:
        raise DomainError("need matching 1-d arrays of at least 2 terminal draws")
    scale = mkt.q0 * math.exp(-mkt.rf * contract.maturity)
    values = qinv_T * quanto_payoff(s_f_T, contract.strike, mkt.q_fix)
    n = values.size
    return PriceResult(scale * float(values.mean()), scale * float(values.std(ddof=1)) / math.sqrt(n), n)


def price_dsw(mkt: MarketConfig, contract: ContractSpec, params: DswParams, grid: SimGrid,
              workers: int | None = None) -> PriceResult:
    """Price by simulating the coupled Heston system under the foreign measure."""
    s_f_T, qinv_T = simulate_dsw_joint(mkt.s0, mkt.qinv0, params, contract.maturity, grid, workers)
    return foreign_measure_price(mkt, contract, s_f_T, qinv_T)


def _marginal_bootstrap_variance(mkt, strikes, maturity, marg_sf, marg_qinv, v, n_boot, seed):
    """Variance of the copula price induced by the finite marginal samples.

    The copula quantiles ``v`` stay fixed while both marginals are rebuilt from
    bootstrap resamples of their own samples.
    """
    g = _rng.generator(seed, _rng.STREAM_BOOTSTRAP)
    reps = np.empty((n_boot, len(strikes)))
    for b in range(n_boot):
        pair = []
        for marg, col in ((marg_sf, 0), (marg_qinv, 1)):
            idx = np.sort(g.integers(0, marg.size, size=marg.size))
            pair.append(quantile(EmpiricalMarginal(marg.sorted_samples[idx]), v[:, col]))
        for j, k in enumerate(strikes):
            reps[b, j] = foreign_measure_price(mkt, ContractSpec(k, maturity), pair[0], pair[1]).price
    return reps.var(axis=0, ddof=1)


def price_copula_strikes(mkt: MarketConfig, strikes, maturity: float, marg_sf: EmpiricalMarginal,
                         marg_qinv: EmpiricalMarginal, cop: KernelCopula, n_draws: int = DEFAULT_DRAWS,
                         seed: int = 0, n_boot: int = MARGINAL_BOOTSTRAP) -> list[PriceResult]:
    """Copula prices for several strikes from one set of draws.

    The standard error combines the copula-draw noise with the noise of the
    marginal samples (estimated by ``n_boot`` bootstrap resamples; ``n_boot=0``
    reports draw noise only).
    """
    if int(n_boot) == 1 or int(n_boot) < 0:
        raise DomainError("n_boot must be 0 or at least 2")
    v = copula_sample(cop, n_draws, seed)
    s_f_T, qinv_T = quantile(marg_sf, v[:, 0]), quantile(marg_qinv, v[:, 1])
    results = [foreign_measure_price(mkt, ContractSpec(k, maturity), s_f_T, qinv_T) for k in strikes]
    if not n_boot:
        return results
    extra = _marginal_bootstrap_variance(mkt, strikes, maturity, marg_sf, marg_qinv, v, int(n_boot), seed)
    return [PriceResult(r.price, math.sqrt(r.std_error ** 2 + e), r.n_samples) for r, e in zip(results, extra)]


def price_copula(mkt: MarketConfig, contract: ContractSpec, marg_sf: EmpiricalMarginal,
                 marg_qinv: EmpiricalMarginal, cop: KernelCopula, n_draws: int = DEFAULT_DRAWS,
                 seed: int = 0, n_boot: int = MARGINAL_BOOTSTRAP) -> PriceResult:
    """Empirical-copula price.

    Copula quantile pairs are mapped through the marginal quantile functions and
    averaged under the foreign-measure payoff. The marginals must describe
    S_f(T) and Q^{-1}(T) under the foreign measure at ``contract.maturity``;
    this cannot be checked here.
    """
    return price_copula_strikes(mkt, [contract.strike], contract.maturity, marg_sf, marg_qinv, cop,
                                n_draws, seed, n_boot)[0]
