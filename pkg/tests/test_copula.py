import math

import numpy as np
import pytest
from scipy.special import ndtr, ndtri
from scipy.stats import kendalltau

from conftest import EXPERT_N, expert, frank_alpha, kernel_copula
from oracles import frank_copula, gaussian_copula, kernel_cdf_dblquad
from quanto.copula import (ExpertMatrix, KernelCopula, calibrate_frank_alpha, copula_eval, copula_sample,
                           frank_conditional_inverse, generate_expert_matrix, kernel_cdf, kernel_marginal_cdf,
                           normal_scores_correlation, silverman_bandwidth)
from quanto.errors import DomainError

GRID = np.linspace(0.05, 0.95, 19)


def empirical_copula(v, grid):
    """Fraction of pairs with ``v1 <= a`` and ``v2 <= b`` on ``grid x grid``."""
    a = (v[:, 0][:, None] <= grid[None, :]).astype(float)
    b = (v[:, 1][:, None] <= grid[None, :]).astype(float)
    return a.T @ b / v.shape[0]


# ------------------------------------------------------------------ expert matrix


def test_expert_matrix_csv_roundtrip(tmp_path):
    m = generate_expert_matrix("gaussian", -0.7, 50, seed=3)
    path = tmp_path / "a.csv"
    m.to_csv(path)
    back = ExpertMatrix.from_csv(path)
    assert np.array_equal(back.rows, m.rows)
    assert path.read_text().startswith("s_f,q_inv\n")


@pytest.mark.parametrize("text, line", [
    ("s_f,q\n", 1),
    ("s_f,q_inv\n" + "1,2\n" * 11 + "1;2\n", 13),
    ("s_f,q_inv\n" + "1,2\n" * 3 + "1,abc\n", 5),
    ("s_f,q_inv\n" + "1,2\n" * 11 + "1,nan\n", 13),
])
def test_expert_matrix_parse_errors_carry_line(text, line):
    with pytest.raises(DomainError, match=f":{line}:"):
        ExpertMatrix.from_csv_text(text)


def test_expert_matrix_needs_ten_rows():
    with pytest.raises(DomainError, match="N >= 10"):
        ExpertMatrix.from_csv_text("s_f,q_inv\n" + "1,2\n" * 9)
    assert len(ExpertMatrix.from_csv_text("s_f,q_inv\n" + "1,2\n" * 10)) == 10


# --------------------------------------------------------------------- estimators


def test_kernel_cdf_single_point():
    assert kernel_cdf([[0.0, 0.0]], 1.0, 0.0, 0.0) == 0.25


def test_kernel_cdf_limits():
    a = np.random.default_rng(0).standard_normal((50, 2))
    assert kernel_cdf(a, 0.3, 1e9, 1e9) > 1 - 1e-12
    assert kernel_cdf(a, 0.3, -1e9, 0.3) < 1e-12


def test_kernel_cdf_against_2d_quadrature():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((50, 2))
    for s, r in rng.uniform(-2, 2, (20, 2)):
        assert kernel_cdf(a, 0.3, s, r) == pytest.approx(kernel_cdf_dblquad(a, 0.3, s, r), abs=1e-6)


def test_kernel_marginal_examples():
    a = np.column_stack((np.zeros(10), np.arange(10.0)))
    assert kernel_marginal_cdf(a, 0.5, 1, 0.0) == 0.5
    b = np.random.default_rng(2).standard_normal((200, 2))
    x = np.linspace(-4, 4, 100)
    assert np.all(np.diff(kernel_marginal_cdf(b, 0.2, 2, x)) > 0)
    for s in np.linspace(-3, 3, 13):
        assert kernel_cdf(b, 0.2, s, np.inf) == pytest.approx(kernel_marginal_cdf(b, 0.2, 1, s), abs=1e-12)


@pytest.mark.parametrize("call", [
    lambda: kernel_cdf([[0.0, 0.0]], 0.0, 0.0, 0.0),
    lambda: kernel_cdf([[0.0, 0.0]], 1.0, math.nan, 0.0),
    lambda: kernel_marginal_cdf([[0.0, 0.0]], 1.0, 3, 0.0),
])
def test_estimator_errors(call):
    with pytest.raises(DomainError):
        call()


def test_silverman_rule():
    assert silverman_bandwidth(100_000) == pytest.approx(1.06 * 1e5 ** -0.2)


# ------------------------------------------------------------------------ copula


def test_pit_table_matches_exact_marginal():
    cop = kernel_copula("gaussian", -0.7)
    x = np.linspace(-5, 5, 301)
    for col in (0, 1):
        assert np.max(np.abs(cop.marginal_pit(col, x) - cop.marginal_cdf(col, x))) < 1e-7


def test_xi_solves_marginal_to_tolerance():
    cop = kernel_copula("gaussian", -0.7)
    u = np.array([1e-6, 0.001, 0.05, 0.3, 0.5, 0.77, 0.999, 1 - 1e-6])
    for col in (0, 1):
        assert np.max(np.abs(cop.marginal_cdf(col, cop.xi(col, u)) - u)) <= 1e-10


def test_exchange_symmetry():
    base = np.random.default_rng(4).standard_normal((500, 2))
    sym = ExpertMatrix(np.vstack((base, base[:, ::-1])))
    cop = KernelCopula(sym)
    for u, v in [(0.2, 0.7), (0.5, 0.9), (0.33, 0.34)]:
        assert copula_eval(cop, u, v) == pytest.approx(copula_eval(cop, v, u), abs=1e-9)


def test_copula_eval_domain():
    cop = kernel_copula("gaussian", -0.7)
    assert copula_eval(cop, 1.0, 1.0) >= 1 - 1e-4
    with pytest.raises(DomainError):
        copula_eval(cop, 1.2, 0.5)
    out = copula_eval(cop, GRID[:, None], GRID[None, :])
    np.testing.assert_allclose(out, cop.grid(GRID, GRID), atol=1e-12)


def test_nondecreasing_in_each_argument():
    c = kernel_copula("t", (-0.7, 3.0)).grid(GRID, GRID)
    assert np.all(np.diff(c, axis=0) >= 0) and np.all(np.diff(c, axis=1) >= 0)


def test_gaussian_fidelity_under_increasing_maps():
    rows = expert("gaussian", -0.7).rows
    warped = KernelCopula(ExpertMatrix(np.column_stack((np.exp(rows[:, 0]), rows[:, 1] ** 3))))
    c = warped.grid(GRID, GRID)
    ref = np.array([[gaussian_copula(u, v, -0.7) for v in GRID] for u in GRID])
    assert np.max(np.abs(c - ref)) < 0.01


def test_increasing_map_invariance():
    rows = expert("gaussian", -0.7).rows
    plain = kernel_copula("gaussian", -0.7).grid(GRID, GRID)
    warped = KernelCopula(ExpertMatrix(np.column_stack((np.exp(rows[:, 0]), ndtr(rows[:, 1])))))
    assert np.max(np.abs(warped.grid(GRID, GRID) - plain)) < 0.01


# ---------------------------------------------------------------------- sampling


def test_sample_marginal_uniformity_and_range():
    v = copula_sample(kernel_copula("gaussian", -0.7), 100_000, seed=5)
    assert v.shape == (100_000, 2)
    assert np.all((v > 0) & (v < 1))
    grid = np.linspace(0, 1, 1001)
    ecdf = np.searchsorted(np.sort(v[:, 0]), grid, side="right") / v.shape[0]
    assert np.max(np.abs(ecdf - grid)) < 0.01


def test_sample_independence_case():
    cop = KernelCopula(generate_expert_matrix("gaussian", 0.0, 20_000, seed=6))
    v = copula_sample(cop, 100_000, seed=7)
    assert abs(normal_scores_correlation(v[:, 0], v[:, 1])) < 0.02


def test_sample_recovers_gaussian_correlation():
    v = copula_sample(kernel_copula("gaussian", -0.7), 100_000, seed=8)
    assert normal_scores_correlation(v[:, 0], v[:, 1]) == pytest.approx(-0.7, abs=0.02)


def test_sample_matches_eval():
    cop = kernel_copula("gaussian", -0.7)
    v = copula_sample(cop, 100_000, seed=9)
    assert np.max(np.abs(empirical_copula(v, GRID) - cop.grid(GRID, GRID))) < 0.01


def test_sample_is_deterministic():
    cop = kernel_copula("gaussian", -0.7)
    assert np.array_equal(copula_sample(cop, 10_000, 3), copula_sample(cop, 10_000, 3))
    with pytest.raises(DomainError):
        copula_sample(cop, 0, 3)


# ------------------------------------------------------------- parametric families


def test_generate_gaussian_independence():
    m = generate_expert_matrix("gaussian", 0.0, EXPERT_N, seed=10)
    assert abs(np.corrcoef(m.rows.T)[0, 1]) < 0.02


def test_generate_t_correlation_and_shape():
    m = expert("t", (-0.7, 3.0))
    assert m.rows.shape == (EXPERT_N, 2)
    assert np.all(np.isfinite(m.rows))
    # Normal-score correlation of a t copula is a bit weaker than its rho.
    assert -0.7 < np.corrcoef(m.rows.T)[0, 1] < -0.6


def test_frank_near_independence():
    m = generate_expert_matrix("frank", 1e-4, 20_000, seed=11)
    assert abs(kendalltau(m.rows[:, 0], m.rows[:, 1])[0]) < 0.02


def test_frank_generator_matches_analytic_cdf():
    m = generate_expert_matrix("frank", -5.0, EXPERT_N, seed=12)
    v = ndtr(m.rows)
    ref = np.array([[frank_copula(u, w, -5.0) for w in GRID] for u in GRID])
    assert np.max(np.abs(empirical_copula(v, GRID) - ref)) < 0.01


def test_frank_conditional_inverse_solves_derivative():
    alpha, u, w = -3.0, 0.3, 0.8
    v = float(frank_conditional_inverse(u, w, alpha))
    eps = 1e-6
    deriv = (frank_copula(u + eps, v, alpha) - frank_copula(u - eps, v, alpha)) / (2 * eps)
    assert deriv == pytest.approx(w, abs=1e-6)


@pytest.mark.parametrize("family, param", [
    ("gaussian", 1.0), ("gaussian", -1.5), ("t", (0.5, 0.5)), ("t", 0.5), ("frank", 0.0), ("clayton", 1.0),
])
def test_generate_rejects_bad_params(family, param):
    with pytest.raises(DomainError):
        generate_expert_matrix(family, param, 100)


def test_frank_calibration_properties(frank_alpha_07):
    alpha_pos = frank_alpha(0.7)
    assert frank_alpha_07 < 0 < alpha_pos
    assert abs(abs(frank_alpha_07) - alpha_pos) / alpha_pos < 0.02
    m = generate_expert_matrix("frank", frank_alpha_07, 1_000_000, seed=99)
    assert np.corrcoef(m.rows.T)[0, 1] == pytest.approx(-0.7, abs=0.01)


@pytest.mark.parametrize("target", [0.0, 0.95, -1.2])
def test_frank_calibration_rejects(target):
    with pytest.raises(DomainError):
        calibrate_frank_alpha(target, n=1000)


def test_normal_scores_of_pit_recover_rows():
    rows = expert("gaussian", -0.7).rows
    np.testing.assert_allclose(ndtri(ndtr(rows[:100])), rows[:100], atol=1e-9)
