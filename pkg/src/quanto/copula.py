"""Kernel-smoothed empirical copula built from an expert's data matrix.

The joint CDF estimate is the integral of a product Gaussian kernel mixture,

    F(s, r) = 1/N * sum_n Phi((s - a_n) / h) * Phi((r - b_n) / h),

and the copula is ``C(u1, u2) = F(xi1(u1), xi2(u2))`` where ``xi_j`` inverts the
kernel marginal of column ``j``. Inside :class:`KernelCopula` both columns are
mapped to rank normal scores and standardized first, so one bandwidth serves both.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata, t as student_t

from . import _rng
from ._io import atomic_write_text
from .errors import ConvergenceError, DomainError

MIN_ROWS = 10
DEFAULT_EXPERT_ROWS = 100_000
BOUNDARY_CLAMP = 1e-6
XI_TOL = 1e-10
_CHUNK = 4_000_000  # matrix entries per evaluation chunk
_TAIL = 8.0  # kernel widths beyond the data covered by the PIT table
_TABLE_STEP = 0.25  # PIT table spacing in units of h
_WINDOW = 8.5  # Phi(-8.5) < 1e-17: kernels further away count as exactly 0 or 1
_TINY = 2.0 ** -53


# --------------------------------------------------------------------------- data


@dataclass(frozen=True)
class ExpertMatrix:
    """``(N, 2)`` array of (S_f(T), Q^{-1}(T)) pairs expressing a dependence view."""

    rows: np.ndarray

    def __post_init__(self):
        a = np.array(self.rows, dtype=float)
        if a.ndim != 2 or a.shape[1] != 2:
            raise DomainError(f"expert matrix must have shape (N, 2), got {a.shape}")
        if a.shape[0] < MIN_ROWS:
            raise DomainError(f"expert matrix needs N >= {MIN_ROWS} rows, got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise DomainError("expert matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "rows", a)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "ExpertMatrix":
        """Read the ``s_f,q_inv`` CSV format; errors carry 1-based line numbers."""
        path = Path(path)
        with path.open(encoding="utf-8", newline="") as fh:
            return cls._parse(fh, str(path))

    @classmethod
    def from_csv_text(cls, text: str) -> "ExpertMatrix":
        return cls._parse(io.StringIO(text), "<string>")

    @classmethod
    def _parse(cls, fh, source: str) -> "ExpertMatrix":
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["s_f", "q_inv"]:
            raise DomainError(f"{source}:1: header must be exactly 's_f,q_inv', got {','.join(header or [])!r}")
        rows = []
        for record in reader:
            line = reader.line_num
            if len(record) != 2:
                raise DomainError(f"{source}:{line}: expected 2 fields, got {len(record)}")
            try:
                pair = (float(record[0]), float(record[1]))
            except ValueError:
                raise DomainError(f"{source}:{line}: not a decimal number pair: {','.join(record)!r}") from None
            if not (math.isfinite(pair[0]) and math.isfinite(pair[1])):
                raise DomainError(f"{source}:{line}: non-finite value")
            rows.append(pair)
        return cls(np.array(rows, dtype=float).reshape(-1, 2))

    def to_csv_text(self) -> str:
        lines = ["s_f,q_inv"]
        lines.extend(f"{s!r},{q!r}" for s, q in self.rows.tolist())
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str | os.PathLike) -> None:
        atomic_write_text(path, self.to_csv_text())


# --------------------------------------------------------------------- estimators


def _as_rows(data) -> np.ndarray:
    return data.rows if isinstance(data, ExpertMatrix) else np.asarray(data, dtype=float)


def _check_h(h: float) -> float:
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise DomainError(f"bandwidth must be positive and finite, got {h}")
    return h


def _check_query(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise DomainError("query points must not be NaN")
    return x


def _mixture_cdf(x: np.ndarray, centers: np.ndarray, h: float) -> np.ndarray:
    """``mean_n Phi((x_i - c_n) / h)`` for a flat array ``x``."""
    out = np.empty(x.size)
    step = max(1, _CHUNK // centers.size)
    for i in range(0, x.size, step):
        out[i:i + step] = ndtr((x[i:i + step, None] - centers[None, :]) / h).mean(axis=1)
    return out


def _mixture_pdf(x: np.ndarray, centers: np.ndarray, h: float) -> np.ndarray:
    out = np.empty(x.size)
    step = max(1, _CHUNK // centers.size)
    for i in range(0, x.size, step):
        d = (x[i:i + step, None] - centers[None, :]) / h
        out[i:i + step] = np.exp(-0.5 * d * d).mean(axis=1)
    return out / (h * math.sqrt(2 * math.pi))


def _windowed_cdf_pdf(x: np.ndarray, sorted_centers: np.ndarray, h: float):
    """Mixture CDF and density at each ``x``, touching only kernels within the window."""
    n = sorted_centers.size
    lo = np.searchsorted(sorted_centers, x - _WINDOW * h)
    hi = np.searchsorted(sorted_centers, x + _WINDOW * h)
    cdf = np.empty(x.size)
    pdf = np.empty(x.size)
    for k in range(x.size):
        d = (x[k] - sorted_centers[lo[k]:hi[k]]) / h
        cdf[k] = (lo[k] + ndtr(d).sum()) / n
        pdf[k] = np.exp(-0.5 * d * d).sum() / n
    return cdf, pdf / (h * math.sqrt(2 * math.pi))


def _joint_cdf(s: np.ndarray, r: np.ndarray, a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty(s.size)
    step = max(1, _CHUNK // a.shape[0])
    for i in range(0, s.size, step):
        ps = ndtr((s[i:i + step, None] - a[None, :, 0]) / h)
        pr = ndtr((r[i:i + step, None] - a[None, :, 1]) / h)
        out[i:i + step] = (ps * pr).mean(axis=1)
    return out


def _scalar_or_array(out: np.ndarray, shape):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def kernel_cdf(data, h: float, s, r):
    """Joint CDF of the Gaussian kernel mixture centred on the rows of ``data``."""
    a = _as_rows(data)
    h = _check_h(h)
    s, r = np.broadcast_arrays(_check_query(s), _check_query(r))
    return _scalar_or_array(_joint_cdf(s.ravel(), r.ravel(), a, h), s.shape)


def kernel_marginal_cdf(data, h: float, column: int, x):
    """Marginal kernel CDF of column 1 (S_f) or 2 (Q^{-1})."""
    if column not in (1, 2):
        raise DomainError(f"column must be 1 or 2, got {column}")
    a = _as_rows(data)
    h = _check_h(h)
    x = _check_query(x)
    return _scalar_or_array(_mixture_cdf(x.ravel(), a[:, column - 1], h), x.shape)


def silverman_bandwidth(n: int) -> float:
    """Rule-of-thumb ``1.06 * N**(-1/5)`` for unit-variance columns."""
    return 1.06 * n ** (-0.2)


# ------------------------------------------------------------------------- copula


class KernelCopula:
    """Copula of the kernel-smoothed expert data.

    Parameters
    ----------
    data : ExpertMatrix
        Raw expert pairs. Each column is replaced by the normal scores of its
        ranks and standardized before smoothing, so any strictly increasing
        rescaling of a column leaves the copula unchanged.
    bandwidth : float, optional
        Kernel width on the standardized columns. Defaults to
        :func:`silverman_bandwidth`.
    """

    def __init__(self, data: ExpertMatrix, bandwidth: float | None = None):
        if not isinstance(data, ExpertMatrix):
            data = ExpertMatrix(data)
        self.data = data
        a = data.rows
        if np.any(np.ptp(a, axis=0) == 0):
            raise DomainError("expert matrix columns must not be constant")
        # Rank-based normal scores make the estimate invariant to increasing maps of a column.
        scores = ndtri(rankdata(a, axis=0) / (a.shape[0] + 1))
        self._z = np.ascontiguousarray((scores - scores.mean(axis=0)) / scores.std(axis=0, ddof=1))
        self._cols = (np.ascontiguousarray(self._z[:, 0]), np.ascontiguousarray(self._z[:, 1]))
        self.bandwidth = _check_h(silverman_bandwidth(len(data)) if bandwidth is None else bandwidth)

    def __repr__(self) -> str:
        return f"KernelCopula(N={len(self.data)}, bandwidth={self.bandwidth:.6g})"

    # marginals on the standardized scale -----------------------------------------
    def marginal_cdf(self, column: int, x):
        """Exact kernel marginal CDF, ``column`` in {0, 1}."""
        x = np.asarray(x, dtype=float)
        return _mixture_cdf(x.ravel(), self._cols[column], self.bandwidth).reshape(x.shape)

    @cached_property
    def _tables(self):
        h = self.bandwidth
        tables = []
        for c in self._cols:
            lo, hi = c.min() - _TAIL * h, c.max() + _TAIL * h
            n = int(math.ceil((hi - lo) / (_TABLE_STEP * h))) + 1
            x = np.linspace(lo, hi, n)
            f, dens = _windowed_cdf_pdf(x, np.sort(c), h)
            tables.append((x, f, CubicHermiteSpline(x, f, dens)))
        return tables

    def marginal_pit(self, column: int, x) -> np.ndarray:
        """Kernel marginal CDF through a cubic Hermite table.

        Nodes are a quarter bandwidth apart with exact values and slopes; the
        interpolation error is below ``1e-5 * k / N`` where ``k`` counts data
        points within one bandwidth of ``x`` (around 1e-9 for N = 1e5).
        """
        xs, _, spline = self._tables[column]
        x = np.clip(np.asarray(x, dtype=float), xs[0], xs[-1])
        return np.clip(spline(x), 0.0, 1.0)

    def xi(self, column: int, u) -> np.ndarray:
        """Generalized inverse of the kernel marginal: ``|F(xi) - u| <= 1e-10``.

        ``u`` is clamped to ``[1e-6, 1 - 1e-6]`` first.
        """
        u = np.clip(np.asarray(u, dtype=float), BOUNDARY_CLAMP, 1 - BOUNDARY_CLAMP)
        shape = u.shape
        u = u.ravel()
        uniq, inverse = np.unique(u, return_inverse=True)
        root = self._invert(column, uniq)
        return root[inverse].reshape(shape)

    def _invert(self, column: int, u: np.ndarray) -> np.ndarray:
        xs, fs, _ = self._tables[column]
        c, h = self._cols[column], self.bandwidth
        i = np.clip(np.searchsorted(fs, u), 1, xs.size - 1)
        lo = xs[np.maximum(i - 2, 0)]
        hi = xs[np.minimum(i + 1, xs.size - 1)]
        # Widen until the exact CDF brackets u.
        for _ in range(60):
            bad_lo = _mixture_cdf(lo, c, h) > u
            bad_hi = _mixture_cdf(hi, c, h) < u
            if not (bad_lo.any() or bad_hi.any()):
                break
            lo = np.where(bad_lo, lo - 10 * h, lo)
            hi = np.where(bad_hi, hi + 10 * h, hi)
        else:
            raise ConvergenceError("could not bracket kernel quantile")
        x = 0.5 * (lo + hi)
        for _ in range(200):
            err = _mixture_cdf(x, c, h) - u
            done = np.abs(err) <= XI_TOL
            if done.all():
                return x
            lo = np.where(err < 0, x, lo)
            hi = np.where(err > 0, x, hi)
            dens = _mixture_pdf(x, c, h)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - err / dens
            ok = (newton > lo) & (newton < hi) & np.isfinite(newton)
            x = np.where(done, x, np.where(ok, newton, 0.5 * (lo + hi)))
        raise ConvergenceError("kernel quantile search did not converge")

    def joint_cdf(self, z1, z2):
        """Joint kernel CDF on the standardized scale."""
        z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=float), np.asarray(z2, dtype=float))
        return _joint_cdf(z1.ravel(), z2.ravel(), self._z, self.bandwidth).reshape(z1.shape)

    def grid(self, u1, u2) -> np.ndarray:
        """Copula values on the outer product ``u1 x u2`` (rows follow ``u1``)."""
        u1 = _check_unit(u1).ravel()
        u2 = _check_unit(u2).ravel()
        h = self.bandwidth
        a = ndtr((self.xi(0, u1)[:, None] - self._cols[0][None, :]) / h)
        b = ndtr((self.xi(1, u2)[:, None] - self._cols[1][None, :]) / h)
        return (a @ b.T) / self._z.shape[0]


def _check_unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.all((u >= 0) & (u <= 1)):
        raise DomainError("copula arguments must lie in [0, 1]")
    return u


def copula_eval(cop: KernelCopula, u1, u2):
    """``C(u1, u2) = F(xi1(u1), xi2(u2))``; broadcasts over array arguments."""
    u1, u2 = np.broadcast_arrays(_check_unit(u1), _check_unit(u2))
    out = cop.joint_cdf(cop.xi(0, u1), cop.xi(1, u2))
    return float(out) if out.ndim == 0 else out


def copula_sample(cop: KernelCopula, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` pairs ``(v1, v2)`` from the kernel copula, shape ``(n, 2)``.

    Each draw picks a data row uniformly, adds ``h`` times a standard normal
    pair (an exact draw from the kernel mixture) and maps both coordinates
    through their kernel marginal CDFs.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    big_n = cop._z.shape[0]
    h = cop.bandwidth

    def run(block, start, stop):
        g = _rng.generator(seed, _rng.STREAM_COPULA, block)
        idx = g.integers(0, big_n, size=_rng.BLOCK_SIZE)[: stop - start]
        z = g.standard_normal((2, _rng.BLOCK_SIZE))[:, : stop - start]
        x = cop._z[idx] + h * z.T
        return np.column_stack((cop.marginal_pit(0, x[:, 0]), cop.marginal_pit(1, x[:, 1])))

    v = np.concatenate(_rng.map_blocks(run, n, workers=1))
    return np.clip(v, _TINY, 1 - _TINY)


# ------------------------------------------------------------- parametric families


def frank_conditional_inverse(u, w, alpha: float):
    """Solve ``dC/du (u, v) = w`` for ``v`` under the Frank copula."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):  # extreme alpha underflows to v = 0 or 1; clipped below
        v = -np.log1p(w * np.expm1(-alpha) / (w + (1 - w) * np.exp(-alpha * u))) / alpha
    return np.clip(v, _TINY, 1 - _TINY)


def _uniforms(g: np.random.Generator, shape) -> np.ndarray:
    return np.clip(g.random(shape), _TINY, 1 - _TINY)


def _parse_family_param(family: str, param):
    if family == "gaussian":
        rho = float(param)
        if not -1 < rho < 1:
            raise DomainError(f"gaussian correlation must lie in (-1, 1), got {rho}")
        return rho
    if family == "t":
        try:
            rho, dof = (float(p) for p in param)
        except (TypeError, ValueError):
            raise DomainError("t copula parameter must be (rho, dof)") from None
        if not -1 < rho < 1:
            raise DomainError(f"t correlation must lie in (-1, 1), got {rho}")
        if not (math.isfinite(dof) and dof >= 1):
            raise DomainError(f"t degrees of freedom must be >= 1, got {dof}")
        return rho, dof
    if family == "frank":
        alpha = float(param)
        if alpha == 0 or not math.isfinite(alpha):
            raise DomainError(f"frank alpha must be finite and non-zero, got {alpha}")
        return alpha
    raise DomainError(f"unknown copula family {family!r}; expected gaussian, t or frank")


def generate_expert_matrix(family: str, param, n: int = DEFAULT_EXPERT_ROWS, seed: int = 0) -> ExpertMatrix:
    """Synthesize expert data whose copula belongs to a parametric family.

    Rows are normal scores ``(Phi^{-1}(u1), Phi^{-1}(u2))`` of copula draws.

    Parameters
    ----------
    family : {"gaussian", "t", "frank"}
    param
        Correlation for ``gaussian``; ``(rho, dof)`` for ``t``; ``alpha`` for ``frank``.
    """
    p = _parse_family_param(family, param)
    n = int(n)
    if n < MIN_ROWS:
        raise DomainError(f"expert matrix needs N >= {MIN_ROWS} rows, got {n}")
    g = _rng.generator(seed, _rng.STREAM_EXPERT)
    if family == "frank":
        u = _uniforms(g, n)
        v = frank_conditional_inverse(u, _uniforms(g, n), p)
        return ExpertMatrix(np.column_stack((ndtri(u), ndtri(v))))
    rho = p if family == "gaussian" else p[0]
    z = g.standard_normal((2, n))
    x1 = z[0]
    x2 = rho * z[0] + math.sqrt(1 - rho * rho) * z[1]
    if family == "gaussian":
        return ExpertMatrix(np.column_stack((x1, x2)))
    dof = p[1]
    scale = np.sqrt(dof / g.chisquare(dof, n))
    return ExpertMatrix(np.column_stack([_t_normal_scores(x * scale, dof) for x in (x1, x2)]))


def _t_normal_scores(x: np.ndarray, dof: float) -> np.ndarray:
    # Upper tail through the survival function so scores stay finite.
    return np.where(x > 0, -ndtri(student_t.sf(x, dof)), ndtri(student_t.cdf(x, dof)))


def normal_scores_correlation(u1, u2) -> float:
    """Pearson correlation of ``Phi^{-1}(u1)`` and ``Phi^{-1}(u2)``."""
    return float(np.corrcoef(ndtri(np.asarray(u1)), ndtri(np.asarray(u2)))[0, 1])


FRANK_CALIBRATION_DRAWS = 1_000_000
FRANK_ALPHA_BOUND = 50.0


def calibrate_frank_alpha(target_rho: float, seed: int = 0, n: int = FRANK_CALIBRATION_DRAWS) -> float:
    """Frank ``alpha`` whose normal-scores correlation equals ``target_rho``.

    One fixed set of uniforms is reused for every trial ``alpha``, which makes the
    sample correlation monotone in ``alpha`` and the search a clean bisection.
    """
    target_rho = float(target_rho)
    if not -0.95 < target_rho < 0.95:
        raise DomainError(f"target correlation must lie in (-0.95, 0.95), got {target_rho}")
    if target_rho == 0:
        raise DomainError("target correlation 0 needs alpha = 0, which the Frank family excludes")
    g = _rng.generator(seed, _rng.STREAM_FRANK_CALIBRATION)
    u = _uniforms(g, n)
    w = _uniforms(g, n)
    z1 = ndtri(u)

    def gap(alpha):
        return float(np.corrcoef(z1, ndtri(frank_conditional_inverse(u, w, alpha)))[0, 1]) - target_rho

    lo, hi = (-FRANK_ALPHA_BOUND, -1e-8) if target_rho < 0 else (1e-8, FRANK_ALPHA_BOUND)
    if gap(lo) * gap(hi) > 0:
        raise ConvergenceError(f"target correlation {target_rho} not reachable with |alpha| <= {FRANK_ALPHA_BOUND}")
    alpha = brentq(gap, lo, hi, xtol=1e-10)
    if abs(gap(alpha)) > 0.005:
        raise ConvergenceError("Frank calibration missed the target correlation")
    return alpha
