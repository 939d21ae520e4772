"""Black-Scholes call prices and implied-volatility inversion (no dividends)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import ConvergenceError, DomainError, NoSolutionError

VOL_LOWER = 1e-6
VOL_UPPER = 5.0
VOL_UPPER_MAX = 40.0
PRICE_TOL = 1e-10
MAX_ITER = 200


def norm_cdf(x):
    """Standard normal CDF through ``erfc``; accurate in both tails."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class BsQuote:
    spot: float
    strike: float
    vol: float
    maturity: float
    rate: float

    def __post_init__(self):
        for name in ("spot", "strike", "vol", "maturity", "rate"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.spot <= 0 or self.strike <= 0:
            raise DomainError("spot and strike must be positive")
        if self.maturity <= 0:
            raise DomainError("maturity must be positive")
        if self.vol < 0:
            raise DomainError("vol must be non-negative")


def _call(spot, strike, vol, maturity, rate):
    """Vectorised call value; assumes validated inputs."""
    spot, strike, vol, maturity, rate = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (spot, strike, vol, maturity, rate)))
    disc_k = strike * np.exp(-rate * maturity)
    intrinsic = np.maximum(spot - disc_k, 0.0)
    sd = vol * np.sqrt(maturity)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(spot / strike) + rate * maturity) / sd + 0.5 * sd
        value = spot * norm_cdf(d1) - disc_k * norm_cdf(d1 - sd)
    value = np.where(sd > 0, value, intrinsic)
    # Rounding can push a few ulps outside the no-arbitrage band.
    return np.clip(value, intrinsic, spot)


def bs_call(quote: BsQuote) -> float:
    """Black-Scholes value of a European call on a non-dividend asset."""
    return float(_call(quote.spot, quote.strike, quote.vol, quote.maturity, quote.rate))


def bs_vega(quote: BsQuote) -> float:
    sd = quote.vol * math.sqrt(quote.maturity)
    if sd == 0:
        return 0.0
    d1 = (math.log(quote.spot / quote.strike) + quote.rate * quote.maturity) / sd + 0.5 * sd
    return quote.spot * math.sqrt(quote.maturity) * math.exp(-0.5 * d1 * d1) / math.sqrt(2 * math.pi)


def no_arbitrage_band(spot: float, strike: float, maturity: float, rate: float) -> tuple[float, float]:
    """Open interval of call prices that admit an implied volatility."""
    return max(spot - strike * math.exp(-rate * maturity), 0.0), spot


def bs_implied_vol(target_price: float, spot: float, strike: float, maturity: float, rate: float) -> float:
    """Volatility at which :func:`bs_call` reproduces ``target_price``.

    Brent's method (safeguarded bisection/secant) on ``[1e-6, 5]``; the upper end
    doubles up to 40 if the root is not bracketed.

    Raises
    ------
    NoSolutionError
        ``target_price`` is not strictly inside the no-arbitrage band.
    ConvergenceError
        No bracket up to vol 40, or the root search did not meet the price tolerance.
    """
    BsQuote(spot, strike, 0.0, maturity, rate)  # validates the contract fields
    target_price = float(target_price)
    if not math.isfinite(target_price):
        raise DomainError(f"target_price must be finite, got {target_price}")
    lower, upper = no_arbitrage_band(spot, strike, maturity, rate)
    if target_price <= lower:
        raise NoSolutionError(f"price {target_price!r} is at or below the lower bound {lower!r}")
    if target_price >= upper:
        raise NoSolutionError(f"price {target_price!r} is at or above the upper bound (spot) {upper!r}")

    def f(vol):
        return float(_call(spot, strike, vol, maturity, rate)) - target_price

    lo, hi = VOL_LOWER, VOL_UPPER
    if f(lo) > 0:
        # Price sits below the 1e-6 vol value but above intrinsic: tiny vols only.
        lo = 0.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > VOL_UPPER_MAX:
            raise ConvergenceError(f"could not bracket implied vol for price {target_price!r} below vol {VOL_UPPER_MAX}")
    try:
        vol = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from None
    if abs(f(vol)) > max(PRICE_TOL, 4 * np.finfo(float).eps * target_price):
        raise ConvergenceError(f"implied vol search stalled with residual {f(vol)!r}")
    return vol
