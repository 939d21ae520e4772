"""Numerical Cases I-VI: build inputs per case, run the three pricers over a strike grid.

Random-number layout for :func:`run_case` (all seeds derived from ``grid.seed``):

* ``"asset"`` drives the coupled simulation *and* the single-asset S_f run that
  feeds the copula marginal and the practitioner vols, so the asset leg is the
  same draw for every pricer;
* ``"fx"`` drives the single-asset Q^{-1} run;
* ``"expert"``, ``"copula"`` and ``"frank"`` drive the expert matrix, the copula
  draws and the Frank calibration.

Every strike reuses the same draws within a pricer, which keeps difference
curves smooth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _rng
from .blackscholes import BsQuote, bs_implied_vol, bs_vega
from .copula import DEFAULT_EXPERT_ROWS, KernelCopula, calibrate_frank_alpha, generate_expert_matrix
from .errors import DomainError, NoSolutionError
from .heston import DswParams, SimGrid, simulate_dsw_joint, simulate_heston_terminal
from .marginals import marginal_from_samples
from .market import ContractSpec, HestonParams, MarketConfig, REFERENCE_MARKET
from .pricing import foreign_measure_price, price_copula_strikes, price_practitioner

CSV_HEADER = "strike,price_practitioner,price_dsw,se_dsw,price_copula,se_copula"
PRICERS = ("practitioner", "dsw", "copula")


def default_strike_grid(s0: float, n: int = 21) -> np.ndarray:
    """``n`` equally spaced strikes from half to one-and-a-half times spot."""
    return np.linspace(0.5 * s0, 1.5 * s0, n)


FLAT = HestonParams(0.0, 0.0, 0.0, 0.2, 0.0)
SMILE = HestonParams(-0.7, 1.0, 0.1, 0.2, 0.5)


@dataclass(frozen=True)
class CaseSpec:
    """One numerical case.

    ``family_param`` is the correlation for ``gaussian``, ``(rho, dof)`` for
    ``t`` and ``alpha`` for ``frank``. A Frank case with ``family_param=None`` is
    calibrated so its normal-scores correlation equals the market correlation.
    """

    case_id: int
    copula_family: str
    family_param: object
    phi_sf: HestonParams
    phi_qinv: HestonParams
    maturity: float
    strike_grid: tuple = field(default_factory=lambda: tuple(default_strike_grid(REFERENCE_MARKET.s0)))

    def __post_init__(self):
        if self.case_id not in range(1, 7):
            raise DomainError(f"case_id must be 1..6, got {self.case_id}")
        if self.copula_family not in ("gaussian", "t", "frank"):
            raise DomainError(f"unknown copula family {self.copula_family!r}")
        k = np.asarray(self.strike_grid, dtype=float)
        if k.ndim != 1 or k.size == 0 or np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise DomainError("strike_grid must be a non-empty ascending sequence of positive strikes")
        if not self.maturity > 0:
            raise DomainError("maturity must be positive")
        object.__setattr__(self, "strike_grid", tuple(float(x) for x in k))


CASES = {
    1: CaseSpec(1, "gaussian", -0.7, FLAT, FLAT, 3.0),
    2: CaseSpec(2, "gaussian", -0.7, SMILE, SMILE, 3.0),
    3: CaseSpec(3, "t", (-0.7, 3.0), SMILE, SMILE, 3.0),
    4: CaseSpec(4, "t", (-0.7, 3.0), SMILE, SMILE, 0.25),
    5: CaseSpec(5, "frank", None, FLAT, FLAT, 3.0),
    6: CaseSpec(6, "frank", None, FLAT, FLAT, 0.25),
}


def case_spec(case_id: int, mkt: MarketConfig = REFERENCE_MARKET) -> CaseSpec:
    """The reference case with its strike grid laid over ``mkt.s0``."""
    if case_id not in CASES:
        raise DomainError(f"case id must be 1..6, got {case_id}")
    return replace(CASES[case_id], strike_grid=tuple(default_strike_grid(mkt.s0)))


# ------------------------------------------------------------------ vanilla smiles


def mc_vanilla_call(samples: np.ndarray, spot: float, strike: float, drift: float,
                    maturity: float) -> tuple[float, float]:
    """Call value and standard error from terminal samples, discounting at ``drift``.

    The samples are first rescaled so their mean equals the exact forward.
    Calls and puts then satisfy parity on the sample itself, so the implied vol
    curve has no seam at the forward. Strikes below the forward are priced
    through the put, which keeps deep in-the-money prices inside the
    no-arbitrage band.
    """
    disc = math.exp(-drift * maturity)
    forward = spot / disc
    samples = np.asarray(samples, dtype=float)
    samples = samples * (forward / samples.mean())
    if strike >= forward:
        pay = np.maximum(samples - strike, 0.0)
        parity = 0.0
    else:
        pay = np.maximum(strike - samples, 0.0)
        parity = spot - strike * disc
    price = parity + disc * float(pay.mean())
    return price, disc * float(pay.std(ddof=1)) / math.sqrt(pay.size)


def implied_vol_from_samples(samples, spot, strike, drift, maturity) -> tuple[float, float]:
    """Implied vol and its vega-propagated standard error; NaNs when the price is out of band."""
    price, se = mc_vanilla_call(samples, spot, strike, drift, maturity)
    try:
        vol = bs_implied_vol(price, spot, strike, maturity, drift)
    except NoSolutionError:
        return math.nan, math.nan
    vega = bs_vega(BsQuote(spot, strike, vol, maturity, drift))
    return vol, (se / vega if vega > 0 else math.inf)


@dataclass(frozen=True)
class SmileRow:
    strike: float
    price: float
    std_error: float
    implied_vol: float
    vol_error: float

    @property
    def flagged(self) -> bool:
        """Price fell outside the no-arbitrage band; no implied vol exists."""
        return math.isnan(self.implied_vol)


def emit_smile(phi: HestonParams, spot: float, drift: float, maturity: float, strike_grid,
               grid: SimGrid, workers: int | None = None) -> list[SmileRow]:
    """Monte Carlo implied-volatility smile of a single Heston asset.

    ``drift`` is the asset's risk-neutral drift; prices are discounted at the same
    rate, which leaves implied vols unchanged for any carry.
    """
    samples = simulate_heston_terminal(spot, phi, drift, maturity, grid, workers)
    rows = []
    for k in strike_grid:
        price, se = mc_vanilla_call(samples, spot, float(k), drift, maturity)
        vol, vol_se = implied_vol_from_samples(samples, spot, float(k), drift, maturity)
        rows.append(SmileRow(float(k), price, se, vol, vol_se))
    return rows


def smile_csv_text(rows: list[SmileRow]) -> str:
    lines = ["strike,price,se,implied_vol,vol_se,flagged"]
    lines.extend(f"{r.strike!r},{r.price!r},{r.std_error!r},{r.implied_vol!r},{r.vol_error!r},{int(r.flagged)}"
                 for r in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- case runs


@dataclass
class CaseResult:
    spec: CaseSpec
    strikes: np.ndarray
    practitioner: np.ndarray
    dsw: np.ndarray
    se_dsw: np.ndarray
    copula: np.ndarray
    se_copula: np.ndarray
    vol_sf_atm: float
    vol_q_atm: float
    vol_sf_strike: np.ndarray
    resolved_param: object
    seeds: dict

    def price(self, pricer: str) -> np.ndarray:
        return getattr(self, pricer)

    def std_error(self, pricer: str) -> np.ndarray:
        return np.zeros_like(self.strikes) if pricer == "practitioner" else getattr(self, f"se_{pricer}")

    def z_gap(self, a: str, b: str) -> np.ndarray:
        """``|a - b|`` per strike in units of the combined standard error."""
        combined = np.hypot(self.std_error(a), self.std_error(b))
        return np.abs(self.price(a) - self.price(b)) / combined

    def to_csv_text(self) -> str:
        cols = (self.strikes, self.practitioner, self.dsw, self.se_dsw, self.copula, self.se_copula)
        lines = [CSV_HEADER]
        lines.extend(",".join(repr(float(v)) for v in row) for row in zip(*cols))
        return "\n".join(lines) + "\n"


def _resolve_family_param(spec: CaseSpec, mkt: MarketConfig, seed: int):
    if spec.copula_family == "frank" and spec.family_param is None:
        return calibrate_frank_alpha(mkt.rho_sf_qinv, seed)
    return spec.family_param


def run_case(spec: CaseSpec, mkt: MarketConfig, grid: SimGrid, expert_rows: int = DEFAULT_EXPERT_ROWS,
             workers: int | None = None) -> CaseResult:
    """Price the case's strike grid with all three models.

    ``grid.seed`` is the master seed; ``grid.n_paths`` sets the coupled paths, the
    marginal sample size and the copula draw count alike.
    """
    T = spec.maturity
    seeds = {name: _rng.derive_seed(grid.seed, name) for name in ("asset", "fx", "expert", "copula", "frank")}

    def sub(name):
        return SimGrid(grid.n_paths, grid.n_steps, seeds[name])

    params = DswParams.from_market(mkt, spec.phi_sf, spec.phi_qinv)
    s_joint, q_joint = simulate_dsw_joint(mkt.s0, mkt.qinv0, params, T, sub("asset"), workers)
    s_single = simulate_heston_terminal(mkt.s0, spec.phi_sf, mkt.rf, T, sub("asset"), workers)
    q_single = simulate_heston_terminal(mkt.qinv0, spec.phi_qinv, mkt.rf - mkt.r, T, sub("fx"), workers)

    vol_sf_atm, _ = implied_vol_from_samples(s_single, mkt.s0, mkt.s0, mkt.rf, T)
    vol_q_atm, _ = implied_vol_from_samples(q_single, mkt.qinv0, mkt.qinv0, mkt.rf - mkt.r, T)

    param = _resolve_family_param(spec, mkt, seeds["frank"])
    expert = generate_expert_matrix(spec.copula_family, param, expert_rows, seeds["expert"])
    cop = KernelCopula(expert)
    strikes = np.asarray(spec.strike_grid, dtype=float)
    cop_prices = price_copula_strikes(mkt, strikes, T, marginal_from_samples(s_single),
                                      marginal_from_samples(q_single), cop, grid.n_paths, seeds["copula"])

    out = {k: np.empty(strikes.size) for k in ("prac", "dsw", "se_dsw", "cop", "se_cop", "vk")}
    for i, k in enumerate(strikes):
        contract = ContractSpec(k, T)
        vk, _ = implied_vol_from_samples(s_single, mkt.s0, k, mkt.rf, T)
        out["vk"][i] = vk
        if math.isnan(vk) or math.isnan(vol_sf_atm) or math.isnan(vol_q_atm):
            out["prac"][i] = math.nan
        else:
            out["prac"][i] = price_practitioner(mkt, contract, vol_sf_atm, vol_q_atm, vk).price
        d = foreign_measure_price(mkt, contract, s_joint, q_joint)
        c = cop_prices[i]
        out["dsw"][i], out["se_dsw"][i] = d.price, d.std_error
        out["cop"][i], out["se_cop"][i] = c.price, c.std_error

    return CaseResult(spec, strikes, out["prac"], out["dsw"], out["se_dsw"], out["cop"], out["se_cop"],
                      vol_sf_atm, vol_q_atm, out["vk"], param, seeds)
