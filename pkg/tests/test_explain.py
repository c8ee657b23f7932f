"""OLS fitting, inference, and report serialization against oracles."""

import math

import numpy as np
import pytest

from topocf.explain import (DesignError, DesignMatrix, RankDeficiencyError,
                            build_design, fit_ols, read_report_csv,
                            render_markdown, significance_stars,
                            write_report_csv)


def _design(X, names=None):
    X = np.asarray(X, dtype=float)
    names = names or tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return DesignMatrix(values=X, column_names=tuple(names),
                        sample_ids=tuple(range(len(X))), dropped_ids=(),
                        column_means=X.mean(axis=0),
                        column_stds=X.std(axis=0), standardized=False)


# ---------------------------------------------------------------------------
# independent oracles

def _betacf(a, b, x, max_iter=300, eps=1e-15):
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-30
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("continued fraction did not converge")


def _betainc_oracle(a, b, x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                     + a * math.log(x) + b * math.log(1.0 - x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _p_two_sided_oracle(t, dof):
    return _betainc_oracle(dof / 2.0, 0.5, dof / (dof + t * t))


def _ols_normal_equations_oracle(X, y):
    """Textbook fit via explicit (X'X)^-1 with intercept."""
    A = np.column_stack([np.ones(len(X)), X])
    gram_inv = np.linalg.inv(A.T @ A)
    beta = gram_inv @ (A.T @ y)
    resid = y - A @ beta
    dof = len(X) - X.shape[1] - 1
    sigma2 = float(resid @ resid) / dof
    se = np.sqrt(sigma2 * np.diag(gram_inv))
    return beta, se, resid, dof


# ---------------------------------------------------------------------------
# fitting

def test_noiseless_planted_model_recovered_exactly():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 2))
    y = 1.0 + 2.0 * X[:, 0] - 3.0 * X[:, 1]
    report = fit_ols(_design(X), y)
    assert report.theta0 == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(report.coefficients, [2.0, -3.0], atol=1e-8)
    assert report.r2 == pytest.approx(1.0, abs=1e-12)


def test_matches_normal_equations_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        X = rng.normal(size=(200, 5))
        y = X @ rng.normal(size=5) + rng.normal(size=200)
        report = fit_ols(_design(X), y)
        beta, se, resid, dof = _ols_normal_equations_oracle(X, y)
        assert report.theta0 == pytest.approx(beta[0], abs=1e-8)
        np.testing.assert_allclose(report.coefficients, beta[1:], atol=1e-8)
        np.testing.assert_allclose(report.std_errors, se, atol=1e-8)
        np.testing.assert_allclose(report.residuals, resid, atol=1e-8)


def test_p_values_match_continued_fraction_oracle():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(120, 4))
    y = X @ np.array([0.5, 0.0, -0.2, 0.05]) + rng.normal(size=120)
    report = fit_ols(_design(X), y)
    dof = 120 - 4 - 1
    for t, p in zip(report.t_stats, report.p_values):
        assert p == pytest.approx(_p_two_sided_oracle(float(t), dof),
                                  abs=1e-8)


def test_noisy_planted_coefficients_within_three_se():
    rng = np.random.default_rng(2024)
    true = np.array([1.5, -0.8, 0.3])
    hits = 0
    for _ in range(100):
        X = rng.normal(size=(80, 3))
        y = 0.5 + X @ true + rng.normal(scale=0.5, size=80)
        report = fit_ols(_design(X), y)
        if np.all(np.abs(report.coefficients - true)
                  <= 3 * report.std_errors[1:]):
            hits += 1
    assert hits >= 93


def test_residuals_orthogonal_to_design():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 4))
    y = rng.normal(size=60)
    report = fit_ols(_design(X), y)
    assert abs(report.residuals.sum()) < 1e-8 * len(y)
    for j in range(4):
        dot = float(report.residuals @ X[:, j])
        assert abs(dot) < 1e-8 * np.linalg.norm(X[:, j]) * \
            np.linalg.norm(report.residuals + 1e-30)
    fitted = y - report.residuals
    np.testing.assert_allclose(fitted + report.residuals, y, atol=1e-10)


def test_row_permutation_invariance():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 3))
    y = rng.normal(size=50)
    a = fit_ols(_design(X), y)
    perm = rng.permutation(50)
    b = fit_ols(_design(X[perm]), y[perm])
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-10)
    np.testing.assert_allclose(a.p_values, b.p_values, atol=1e-10)
    assert a.r2 == pytest.approx(b.r2, abs=1e-12)


def test_rank_deficiency_names_columns():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 3))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    with pytest.raises(RankDeficiencyError, match="collinear"):
        fit_ols(_design(X, names=("a", "b", "c", "a_plus_b")),
                rng.normal(size=30))


def test_pinv_policy_handles_collinear_design():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 2))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    y = 1.0 + 2.0 * X[:, 0] + rng.normal(scale=0.1, size=40)
    report = fit_ols(_design(X, names=("a", "b", "ab")), y, rank_policy="pinv")
    assert "collinear_columns" in report.metadata
    fitted = y - report.residuals
    # predictions still match an lstsq solve even though coefficients are
    # only identified up to the null space
    A = np.column_stack([np.ones(40), X])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    np.testing.assert_allclose(fitted, A @ beta, atol=1e-8)


def test_adjusted_r2_arithmetic_at_large_sample_shape():
    """At 600 rows and 11 predictors, R^2 = 0.971 gives an adjusted value
    of 1 - 0.029 * 599/588 = 0.97046, which still displays as 0.971 at
    three decimals (displayed rounding is to nearest)."""
    m, c, r2 = 600, 11, 0.971
    adj = 1.0 - (1.0 - r2) * (m - 1) / (m - c - 1)
    assert adj == pytest.approx(0.9704581, abs=1e-6)
    assert f"{adj:.3f}" == "0.970"
    assert abs(adj - 0.971) < 6e-4  # rounds up to the displayed value


def test_dof_exhaustion_is_an_error():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(4, 3))
    with pytest.raises(DesignError):
        fit_ols(_design(X), rng.normal(size=4))


# ---------------------------------------------------------------------------
# stars

def test_significance_star_thresholds_inclusive():
    assert significance_stars(0.001) == "***"
    assert significance_stars(0.0011) == "**"
    assert significance_stars(0.01) == "**"
    assert significance_stars(0.011) == "*"
    assert significance_stars(0.05) == "*"
    assert significance_stars(0.051) == ""
    assert significance_stars(float("nan")) == ""


# ---------------------------------------------------------------------------
# design building

def test_build_design_standardizes_columns():
    rng = np.random.default_rng(1)
    vectors = {i: rng.normal(loc=5.0, scale=3.0, size=3) for i in range(20)}
    metrics = {i: rng.normal() for i in range(20)}
    design, y = build_design(vectors, metrics, column_names=("a", "b", "c"))
    assert design.standardized
    np.testing.assert_allclose(design.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(design.values.std(axis=0), 1.0, atol=1e-12)
    assert len(y) == 20


def test_build_design_drops_undefined_rows():
    rng = np.random.default_rng(2)
    vectors = {i: rng.normal(size=2) for i in range(12)}
    vectors[3] = np.array([np.nan, 1.0])
    vectors[7] = np.array([np.inf, 1.0])
    metrics = {i: float(i) for i in range(12)}
    del metrics[9]  # missing metric also drops the row
    design, y = build_design(vectors, metrics, column_names=("a", "b"))
    assert design.dropped_ids == (3, 7, 9)
    assert design.num_rows == 9


def test_build_design_errors():
    rng = np.random.default_rng(3)
    vectors = {i: rng.normal(size=2) for i in range(3)}
    with pytest.raises(DesignError, match="usable rows"):
        build_design(vectors, {i: 0.0 for i in range(3)},
                     column_names=("a", "b"))
    vectors = {i: np.array([1.0, rng.normal()]) for i in range(10)}
    with pytest.raises(DesignError, match="zero-variance column\\(s\\): a"):
        build_design(vectors, {i: 0.0 for i in range(10)},
                     column_names=("a", "b"))


def test_constant_target_with_standardized_predictors():
    rng = np.random.default_rng(4)
    vectors = {i: rng.normal(size=3) for i in range(25)}
    metrics = {i: 0.42 for i in range(25)}
    design, y = build_design(vectors, metrics, column_names=("a", "b", "c"))
    report = fit_ols(design, y)
    assert report.theta0 == pytest.approx(0.42, abs=1e-10)
    np.testing.assert_allclose(report.coefficients, 0.0, atol=1e-10)
    assert report.r2 == pytest.approx(1.0)


def test_intercept_equals_mean_with_standardized_predictors():
    rng = np.random.default_rng(5)
    vectors = {i: rng.normal(size=3) for i in range(30)}
    metrics = {i: float(rng.normal()) for i in range(30)}
    design, y = build_design(vectors, metrics, column_names=("a", "b", "c"))
    report = fit_ols(design, y)
    assert report.theta0 == pytest.approx(float(np.mean(y)), abs=1e-10)


# ---------------------------------------------------------------------------
# serialization

def test_report_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(40, 3))
    y = X @ np.array([1.0, 0.0, -0.5]) + rng.normal(size=40)
    report = fit_ols(_design(X, names=("a", "b", "c")), y)
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    back = read_report_csv(path)
    assert back.theta0 == report.theta0
    np.testing.assert_array_equal(back.coefficients, report.coefficients)
    np.testing.assert_array_equal(back.std_errors, report.std_errors)
    np.testing.assert_array_equal(back.p_values, report.p_values)
    assert back.stars == report.stars
    assert back.r2 == report.r2
    assert back.adj_r2 == report.adj_r2
    assert back.column_names == report.column_names


def test_render_markdown_layout():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 2))
    y = 3.0 * X[:, 0] + rng.normal(size=40)
    report = fit_ols(_design(X, names=("alpha", "beta")), y)
    text = render_markdown(report, title="demo")
    lines = text.splitlines()
    assert lines[0] == "### demo"
    assert any(line.startswith("| R² (adj.)") for line in lines)
    constant_idx = next(i for i, l in enumerate(lines)
                        if l.startswith("| Constant"))
    alpha_idx = next(i for i, l in enumerate(lines)
                     if l.startswith("| alpha"))
    assert constant_idx < alpha_idx
    assert "***" in lines[alpha_idx]
