"""Least-squares fitter checked against the normal equations, plus the
rank, collinearity, and screening error paths."""

import numpy as np
import pytest

from schooljam.errors import (
    DegenerateVariance,
    NoSignificantFeatures,
    PerfectCollinearity,
    RankDeficient,
    ValidationError,
)
from schooljam.ols import OlsFit, dependent_columns, fit_ols, significant_subset, vif

from conftest import ols_normal_equations


def _random_problem(seed, n=120, k=5, noise=0.3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k))
    beta = rng.uniform(-2, 2, k)
    y = 1.5 + X @ beta + noise * rng.normal(size=n)
    names = tuple(f"f{i}" for i in range(k))
    return X, y, names


def test_matches_normal_equations():
    for seed in range(5):
        X, y, names = _random_problem(seed)
        fit = fit_ols(X, y, names)
        beta, se, sigma2 = ols_normal_equations(X, y)
        assert np.abs(fit.all_coef() - beta).max() < 1e-10
        assert np.abs(fit.std_errors - se).max() < 1e-10
        assert fit.sigma2 == pytest.approx(sigma2, rel=1e-12)


def test_noiseless_planted_recovery():
    X, _, names = _random_problem(3, noise=0.0)
    beta = np.array([0.4, -1.1, 0.0, 2.2, -0.7])
    y = -0.9 + X @ beta
    fit = fit_ols(X, y, names)
    assert abs(fit.intercept + 0.9) < 1e-12
    assert np.abs(fit.coef - beta).max() < 1e-12
    assert fit.r_squared == pytest.approx(1.0)


def test_predict_and_round_trip():
    X, y, names = _random_problem(7)
    fit = fit_ols(X, y, names)
    assert np.abs(fit.predict(X) - (fit.intercept + X @ fit.coef)).max() == 0.0
    clone = OlsFit.from_dict(fit.to_dict())
    assert clone.feature_names == fit.feature_names
    assert np.abs(clone.all_coef() - fit.all_coef()).max() < 1e-15
    assert np.abs(clone.xtx_inv - fit.xtx_inv).max() < 1e-15


def test_ci_brackets_estimates():
    X, y, names = _random_problem(11)
    fit = fit_ols(X, y, names)
    est = fit.all_coef()
    assert ((fit.ci_low <= est) & (est <= fit.ci_high)).all()
    width = fit.ci_high - fit.ci_low
    # symmetric t intervals
    assert np.abs((est - fit.ci_low) - (fit.ci_high - est)).max() < 1e-10
    assert (width > 0).all()


def test_rank_deficient_names_dependent_column():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])  # exact combination
    names = ("a", "b", "c", "dup")
    with pytest.raises(RankDeficient) as err:
        fit_ols(X, np.arange(50.0), names)
    assert err.value.columns == ("dup",)


def test_shares_summing_to_one_flag_the_last_share():
    rng = np.random.default_rng(1)
    raw = rng.random((60, 3))
    shares = raw / raw.sum(axis=1, keepdims=True)
    names = ("s1", "s2", "s3")
    # against an intercept the three shares carry an exact affine tie;
    # the scan keeps the earlier columns and names the last one
    with pytest.raises(RankDeficient) as err:
        fit_ols(shares, rng.normal(size=60), names)
    assert err.value.columns == ("s3",)
    Xd = np.column_stack([np.ones(60), shares])
    assert dependent_columns(Xd, ("intercept",) + names) == ("s3",)


def test_degenerate_outcome():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 2))
    with pytest.raises(DegenerateVariance):
        fit_ols(X, np.full(40, 3.0), ("a", "b"))


def test_validation_paths():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 2))
    y = rng.normal(size=30)
    with pytest.raises(ValidationError):
        fit_ols(X, y[:-1], ("a", "b"))
    with pytest.raises(ValidationError):
        fit_ols(X, y, ("a",))
    with pytest.raises(ValidationError):
        fit_ols(np.where(X > 2.5, np.nan, X) * np.nan, y, ("a", "b"))
    with pytest.raises(ValidationError):
        fit_ols(X[:3], y[:3], ("a", "b"))


def test_vif_matches_correlation_inverse():
    # independent oracle: for standardized columns, VIF_j is the j-th
    # diagonal of the inverse correlation matrix
    rng = np.random.default_rng(4)
    base = rng.normal(size=(500, 3))
    X = np.column_stack([base[:, 0], base[:, 0] * 0.8 + base[:, 1] * 0.6, base[:, 2]])
    names = ("x1", "x2", "x3")
    got = vif(X, names)
    corr = np.corrcoef(X, rowvar=False)
    expect = np.diag(np.linalg.inv(corr))
    for j, name in enumerate(names):
        assert got[name] == pytest.approx(expect[j], abs=1e-10)


def test_vif_error_paths():
    rng = np.random.default_rng(5)
    a = rng.normal(size=80)
    b = rng.normal(size=80)
    with pytest.raises(PerfectCollinearity):
        vif(np.column_stack([a, b, a + b]), ("a", "b", "c"))
    with pytest.raises(DegenerateVariance):
        vif(np.column_stack([a, np.full(80, 2.0)]), ("a", "const"))


def _fit_with_p(names, p_values):
    k = len(names)
    return OlsFit(
        feature_names=tuple(names),
        intercept=0.0,
        coef=np.ones(k),
        std_errors=np.ones(k + 1),
        t_values=np.ones(k + 1),
        p_values=np.asarray([0.5] + list(p_values)),
        ci_low=np.zeros(k + 1),
        ci_high=np.ones(k + 1),
        r_squared=0.5,
        adj_r_squared=0.5,
        sigma2=1.0,
        n_obs=100,
        df_resid=100 - k - 1,
        xtx_inv=np.eye(k + 1),
    )


def test_significant_subset_strict_threshold():
    fit = _fit_with_p(("a", "b", "c"), (0.05, 0.1, 0.0999999))
    # p exactly at the threshold does not qualify
    assert significant_subset(fit, alpha=0.1) == ("a", "c")


def test_no_significant_features():
    fit = _fit_with_p(("a", "b"), (0.2, 0.9))
    with pytest.raises(NoSignificantFeatures):
        significant_subset(fit, alpha=0.1)
