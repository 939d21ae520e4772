"""Empirical terminal distributions with a continuous, invertible CDF.

Sorted samples ``x_(1) <= ... <= x_(M)`` are placed at plotting positions
``k / (M + 1)`` and joined linearly. Tied samples collapse to one node at the
mean of their positions, which keeps the interior strictly increasing. Outside
the sample range the CDF is held at its end values and the quantile returns the
sample extremes.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError


class EmpiricalMarginal:
    """Interpolated empirical CDF of a one-dimensional sample."""

    def __init__(self, sorted_samples: np.ndarray):
        x = np.asarray(sorted_samples, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise DomainError("need at least 2 samples")
        if not np.all(np.isfinite(x)):
            raise DomainError("samples must be finite")
        if np.any(np.diff(x) < 0):
            raise DomainError("samples must be sorted in nondecreasing order")
        self.sorted_samples = x
        self.sorted_samples.setflags(write=False)
        m = x.size
        nodes, first, counts = np.unique(x, return_index=True, return_counts=True)
        # mean of positions first+1 .. first+count, divided by M+1
        self._x = nodes
        self._p = (first + 0.5 * (counts + 1)) / (m + 1)

    @property
    def size(self) -> int:
        return self.sorted_samples.size

    @property
    def band(self) -> tuple[float, float]:
        """CDF values at the lowest and highest nodes."""
        return float(self._p[0]), float(self._p[-1])

    def cdf(self, x):
        out = np.interp(np.asarray(x, dtype=float), self._x, self._p)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, u):
        return quantile(self, u)

    def __repr__(self) -> str:
        return f"EmpiricalMarginal(M={self.size}, range=[{self._x[0]:.6g}, {self._x[-1]:.6g}])"


def marginal_from_samples(samples) -> EmpiricalMarginal:
    """Build an :class:`EmpiricalMarginal`; the order of ``samples`` is irrelevant."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    return EmpiricalMarginal(np.sort(x))


def quantile(marginal: EmpiricalMarginal, u):
    """Generalized inverse of ``marginal.cdf`` for ``u`` in (0, 1)."""
    u_arr = np.asarray(u, dtype=float)
    if not np.all((u_arr > 0) & (u_arr < 1)):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    out = np.interp(u_arr, marginal._p, marginal._x)
    return float(out) if out.ndim == 0 else out
