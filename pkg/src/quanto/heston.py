"""Monte Carlo simulation of single-asset Heston and the coupled two-asset system.

Variances use full-truncation Euler (negative values clamped to zero inside both
drift and diffusion); prices are stepped exactly in log space given the clamped
variance, so every simulated price is strictly positive.

The asset leg of :func:`simulate_dsw_joint` draws factors 0 and 1 exactly as
:func:`simulate_heston_terminal` does, so under the same seed the joint
simulator's ``s_f_T`` is bit-identical to a single-asset run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import DomainError
from .market import HestonParams, MarketConfig

STEPS_PER_YEAR = 96
MIN_STEPS = 24
PRICING_PATHS = 200_000
SMOKE_PATHS = 20_000


@dataclass(frozen=True)
class SimGrid:
    n_paths: int
    n_steps: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        try:
            seed = _rng.check_seed(self.seed)
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "seed", seed)

    @classmethod
    def for_maturity(cls, maturity: float, n_paths: int = PRICING_PATHS, seed: int = 0) -> "SimGrid":
        """Default grid: 96 steps per year, at least 24 steps."""
        return cls(n_paths, max(MIN_STEPS, math.ceil(STEPS_PER_YEAR * maturity - 1e-9)), seed)


@dataclass(frozen=True)
class DswParams:
    """Parameters of the joint (S_f, V1, 1/Q, V2) system; dividend yield is zero."""

    phi_sf: HestonParams
    phi_qinv: HestonParams
    rho_cross: float
    r: float
    rf: float

    def __post_init__(self):
        if not math.isfinite(self.rho_cross) or not -1.0 <= self.rho_cross <= 1.0:
            raise DomainError(f"rho_cross must lie in [-1, 1], got {self.rho_cross}")
        if not (math.isfinite(self.r) and math.isfinite(self.rf)):
            raise DomainError("rates must be finite")

    @classmethod
    def from_market(cls, mkt: MarketConfig, phi_sf: HestonParams, phi_qinv: HestonParams) -> "DswParams":
        return cls(phi_sf, phi_qinv, mkt.rho_sf_qinv, mkt.r, mkt.rf)

    def mixing_matrix(self) -> np.ndarray:
        """Lower-triangular map from 4 independent normals to (asset, var1, fx, var2) shocks."""
        r1, r2, rho = self.phi_sf.rho_sv, self.phi_qinv.rho_sv, self.rho_cross
        c, c1, c2 = math.sqrt(1 - rho * rho), math.sqrt(1 - r1 * r1), math.sqrt(1 - r2 * r2)
        return np.array([
            [1.0, 0.0, 0.0, 0.0],
            [r1, c1, 0.0, 0.0],
            [rho, 0.0, c, 0.0],
            [rho * r2, 0.0, r2 * c, c2],
        ])


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v}")


class _Leg:
    """One (log-price, variance) pair advanced by full-truncation Euler."""

    __slots__ = ("log_x", "v", "p", "drift", "dt", "sqdt")

    def __init__(self, size: int, p: HestonParams, drift: float, dt: float):
        self.log_x = np.zeros(size)
        self.v = np.full(size, p.v0)
        self.p = p
        self.drift = drift
        self.dt = dt
        self.sqdt = math.sqrt(dt)

    def step(self, z_x: np.ndarray, z_v: np.ndarray) -> np.ndarray:
        """Advance one step; returns the log-price increment."""
        p, dt = self.p, self.dt
        vp = np.maximum(self.v, 0.0)
        vol = np.sqrt(vp) * self.sqdt
        dlog = (self.drift - 0.5 * vp) * dt + vol * z_x
        self.log_x += dlog
        self.v += p.kappa * (p.v_bar - vp) * dt + p.eta * vol * z_v
        return dlog


def simulate_heston_terminal(spot: float, params: HestonParams, drift: float, maturity: float,
                             grid: SimGrid, workers: int | None = None) -> np.ndarray:
    """Terminal prices of a single Heston asset, one per path.

    ``drift`` is the risk-neutral drift of the price (e.g. ``rf`` for the foreign
    asset, ``rf - r`` for the FOR/DOM rate).
    """
    _check_finite(spot=spot, drift=drift, maturity=maturity)
    if spot <= 0 or maturity <= 0:
        raise DomainError("spot and maturity must be positive")
    dt = maturity / grid.n_steps
    c1 = math.sqrt(1 - params.rho_sv * params.rho_sv)

    def run(block, start, stop):
        draw = _rng.block_normals(grid.seed, _rng.STREAM_HESTON, block, (0, 1), stop - start)
        leg = _Leg(stop - start, params, drift, dt)
        for _ in range(grid.n_steps):
            z0, z1 = draw()
            leg.step(z0, params.rho_sv * z0 + c1 * z1)
        return leg.log_x

    log_x = np.concatenate(_rng.map_blocks(run, grid.n_paths, workers))
    return spot * np.exp(log_x)


def _dsw_blocks(s0, qinv0, params: DswParams, maturity, grid, workers, record):
    _check_finite(s0=s0, qinv0=qinv0, maturity=maturity)
    if s0 <= 0 or qinv0 <= 0 or maturity <= 0:
        raise DomainError("s0, qinv0 and maturity must be positive")
    dt = maturity / grid.n_steps
    m = params.mixing_matrix()

    def run(block, start, stop):
        size = stop - start
        draw = _rng.block_normals(grid.seed, _rng.STREAM_HESTON, block, (0, 1, 2, 3), size)
        asset = _Leg(size, params.phi_sf, params.rf, dt)
        fx = _Leg(size, params.phi_qinv, params.rf - params.r, dt)
        incs = (np.empty((grid.n_steps, size)), np.empty((grid.n_steps, size))) if record else None
        for i in range(grid.n_steps):
            z0, z1, z2, z3 = draw()
            da = asset.step(z0, m[1, 0] * z0 + m[1, 1] * z1)
            dq = fx.step(m[2, 0] * z0 + m[2, 2] * z2, m[3, 0] * z0 + m[3, 2] * z2 + m[3, 3] * z3)
            if record:
                incs[0][i] = da
                incs[1][i] = dq
        return asset.log_x, fx.log_x, incs

    return _rng.map_blocks(run, grid.n_paths, workers)


def simulate_dsw_joint(s0: float, qinv0: float, params: DswParams, maturity: float,
                       grid: SimGrid, workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Joint terminal values ``(S_f(T), Q^{-1}(T))`` under the foreign risk-neutral measure.

    Four independent normals per step go through :meth:`DswParams.mixing_matrix`.
    The asset drifts at ``rf``; the FOR/DOM rate at ``rf - r``.
    """
    parts = _dsw_blocks(s0, qinv0, params, maturity, grid, workers, record=False)
    log_s = np.concatenate([p[0] for p in parts])
    log_q = np.concatenate([p[1] for p in parts])
    return s0 * np.exp(log_s), qinv0 * np.exp(log_q)


def simulate_dsw_log_increments(s0: float, qinv0: float, params: DswParams, maturity: float,
                                grid: SimGrid, workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-step log increments of S_f and 1/Q, each shaped ``(n_steps, n_paths)``.

    Meant for diagnostics on small grids; memory grows with ``n_steps * n_paths``.
    """
    parts = _dsw_blocks(s0, qinv0, params, maturity, grid, workers, record=True)
    return (np.concatenate([p[2][0] for p in parts], axis=1),
            np.concatenate([p[2][1] for p in parts], axis=1))
