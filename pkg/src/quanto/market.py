"""Economic environment, contract terms and Heston parameter records."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields

import numpy as np

from ._io import format_kv, parse_kv, read_kv
from .errors import DomainError


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")
    return value


def _correlation(name: str, value: float) -> float:
    value = _finite(name, value)
    if not -1.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [-1, 1], got {value}")
    return value


def _positive(name: str, value: float) -> float:
    value = _finite(name, value)
    if value <= 0.0:
        raise DomainError(f"{name} must be positive, got {value}")
    return value


def _nonnegative(name: str, value: float) -> float:
    value = _finite(name, value)
    if value < 0.0:
        raise DomainError(f"{name} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class MarketConfig:
    """Shared market environment.

    Rates are continuously compounded decimals per year. ``q0`` is the spot
    exchange rate in DOM per FOR; ``q_fix`` is the contractual conversion rate
    of the quanto payoff.
    """

    rho_sf_qinv: float
    q0: float
    s0: float
    r: float
    rf: float
    q_fix: float

    def __post_init__(self):
        object.__setattr__(self, "rho_sf_qinv", _correlation("rho_sf_qinv", self.rho_sf_qinv))
        for name in ("q0", "s0", "q_fix"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        for name in ("r", "rf"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))

    @property
    def qinv0(self) -> float:
        """Spot exchange rate in FOR per DOM."""
        return 1.0 / self.q0

    @classmethod
    def from_mapping(cls, values: dict[str, str], source: str = "config") -> "MarketConfig":
        expected = [f.name for f in fields(cls)]
        unknown = sorted(set(values) - set(expected))
        if unknown:
            raise DomainError(f"{source}: unknown keys: {', '.join(unknown)}")
        missing = [k for k in expected if k not in values]
        if missing:
            raise DomainError(f"{source}: missing keys: {', '.join(missing)}")
        try:
            parsed = {k: float(values[k]) for k in expected}
        except ValueError as exc:
            raise DomainError(f"{source}: {exc}") from None
        return cls(**parsed)

    @classmethod
    def from_text(cls, text: str) -> "MarketConfig":
        return cls.from_mapping(parse_kv(text))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "MarketConfig":
        return cls.from_mapping(read_kv(path), source=str(path))

    def to_text(self) -> str:
        return format_kv({f.name: repr(getattr(self, f.name)) for f in fields(self)})


#: The parameter table used for every numerical case.
REFERENCE_MARKET = MarketConfig(rho_sf_qinv=-0.7, q0=3.1, s0=2500.0, r=0.1, rf=0.01, q_fix=3.0)


@dataclass(frozen=True)
class HestonParams:
    """Heston parameters in the order (rho, kappa, v_bar, v0, eta)."""

    rho_sv: float
    kappa: float
    v_bar: float
    v0: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "rho_sv", _correlation("rho_sv", self.rho_sv))
        for name in ("kappa", "v_bar", "v0", "eta"):
            object.__setattr__(self, name, _nonnegative(name, getattr(self, name)))

    @classmethod
    def from_sequence(cls, values) -> "HestonParams":
        values = [float(v) for v in values]
        if len(values) != 5:
            raise DomainError(f"Heston parameters need 5 entries (rho, kappa, v_bar, v0, eta), got {len(values)}")
        return cls(*values)

    @classmethod
    def parse(cls, text: str) -> "HestonParams":
        """Parse ``"rho,kappa,v_bar,v0,eta"``."""
        try:
            return cls.from_sequence(p for p in text.split(","))
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"cannot parse Heston parameters {text!r}: {exc}") from None

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.rho_sv, self.kappa, self.v_bar, self.v0, self.eta)

    @property
    def constant_variance(self) -> bool:
        """True when the variance never moves from ``v0``."""
        return self.eta == 0.0 and (self.kappa == 0.0 or self.v_bar == self.v0)

    def __str__(self) -> str:
        return ",".join(repr(v) for v in self.as_tuple())


@dataclass(frozen=True)
class ContractSpec:
    """Strike (FOR units) and maturity (years) of a quanto call."""

    strike: float
    maturity: float

    def __post_init__(self):
        object.__setattr__(self, "strike", _positive("strike", self.strike))
        object.__setattr__(self, "maturity", _positive("maturity", self.maturity))


def quanto_payoff(s_f_T, strike, q_fix):
    """Quanto call payoff ``q_fix * max(S_f(T) - K, 0)`` in DOM currency.

    Works elementwise on arrays; scalars in give a float back.
    """
    s = np.asarray(s_f_T, dtype=float)
    k = np.asarray(strike, dtype=float)
    q = np.asarray(q_fix, dtype=float)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(k)) and np.all(np.isfinite(q))):
        raise DomainError("quanto_payoff inputs must be finite")
    if np.any(q <= 0):
        raise DomainError("q_fix must be positive")
    out = q * np.maximum(s - k, 0.0)
    return float(out) if out.ndim == 0 else out


def rho_domestic_from_foreign(rho_sf_qinv: float) -> float:
    """Correlation of S_f with Q given its correlation with 1/Q: a sign flip."""
    rho = _correlation("rho_sf_qinv", rho_sf_qinv)
    return 0.0 - rho
