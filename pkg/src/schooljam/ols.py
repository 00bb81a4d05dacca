"""Linear regression of congestion frequency on built-environment features.

QR-based least squares with classical standard errors, exact rank handling
(dependent columns are named, not silently dropped), variance inflation
factors, and the p < 0.1 screen that picks which features feed the
interpretability stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from .errors import (
    DegenerateVariance,
    NoSignificantFeatures,
    PerfectCollinearity,
    RankDeficient,
    ValidationError,
)

RANK_TOL = 1e-8
VIF_R2_LIMIT = 1.0 - 1e-10


@dataclass
class OlsFit:
    feature_names: tuple[str, ...]  # regressors, intercept excluded
    intercept: float
    coef: np.ndarray
    std_errors: np.ndarray  # intercept first, then features
    t_values: np.ndarray
    p_values: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    r_squared: float
    adj_r_squared: float
    sigma2: float
    n_obs: int
    df_resid: int
    xtx_inv: np.ndarray

    def all_names(self) -> tuple[str, ...]:
        return ("intercept",) + self.feature_names

    def all_coef(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.coef])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.intercept + X @ self.coef

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "intercept": float(self.intercept),
            "coef": [float(v) for v in self.coef],
            "std_errors": [float(v) for v in self.std_errors],
            "t_values": [float(v) for v in self.t_values],
            "p_values": [float(v) for v in self.p_values],
            "ci_low": [float(v) for v in self.ci_low],
            "ci_high": [float(v) for v in self.ci_high],
            "r_squared": float(self.r_squared),
            "adj_r_squared": float(self.adj_r_squared),
            "sigma2": float(self.sigma2),
            "n_obs": int(self.n_obs),
            "df_resid": int(self.df_resid),
            "xtx_inv": [[float(v) for v in row] for row in self.xtx_inv],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OlsFit":
        return cls(
            feature_names=tuple(doc["feature_names"]),
            intercept=float(doc["intercept"]),
            coef=np.asarray(doc["coef"], dtype=float),
            std_errors=np.asarray(doc["std_errors"], dtype=float),
            t_values=np.asarray(doc["t_values"], dtype=float),
            p_values=np.asarray(doc["p_values"], dtype=float),
            ci_low=np.asarray(doc["ci_low"], dtype=float),
            ci_high=np.asarray(doc["ci_high"], dtype=float),
            r_squared=float(doc["r_squared"]),
            adj_r_squared=float(doc["adj_r_squared"]),
            sigma2=float(doc["sigma2"]),
            n_obs=int(doc["n_obs"]),
            df_resid=int(doc["df_resid"]),
            xtx_inv=np.asarray(doc["xtx_inv"], dtype=float),
        )


def dependent_columns(X: np.ndarray, names: tuple[str, ...]) -> tuple[str, ...]:
    """Greedy left-to-right scan naming columns that add no rank.

    A column is dependent when appending it to the independent columns seen
    so far does not raise the matrix rank. The result is order dependent by
    design: earlier columns win ties, so with shares that sum to one the
    last share is the one reported.
    """
    X = np.asarray(X, dtype=float)
    kept: list[int] = []
    dependent: list[str] = []
    rank = 0
    for k in range(X.shape[1]):
        cand = X[:, kept + [k]]
        new_rank = np.linalg.matrix_rank(cand, tol=RANK_TOL * max(1.0, np.abs(cand).max()))
        if new_rank > rank:
            kept.append(k)
            rank = new_rank
        else:
            dependent.append(names[k])
    return tuple(dependent)


def fit_ols(
    X: np.ndarray, y: np.ndarray, feature_names: tuple[str, ...]
) -> OlsFit:
    """Least squares of y on an intercept plus the given columns.

    Raises RankDeficient (naming the offending columns) instead of
    returning a pseudo-inverse answer, and DegenerateVariance when the
    outcome has no variance to explain.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValidationError("X must be (n, K) with one row per outcome")
    if X.shape[1] != len(feature_names):
        raise ValidationError("feature_names must match the column count")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValidationError("non-finite values in the regression inputs")
    n, k = X.shape
    if n <= k + 1:
        raise ValidationError(f"need more than {k + 1} rows, got {n}")

    Xd = np.concatenate([np.ones((n, 1)), X], axis=1)
    all_names = ("intercept",) + tuple(feature_names)
    scale = max(1.0, float(np.abs(Xd).max()))
    if np.linalg.matrix_rank(Xd, tol=RANK_TOL * scale) < k + 1:
        bad = dependent_columns(Xd, all_names)
        raise RankDeficient(
            f"design matrix is rank deficient; dependent columns: {', '.join(bad)}",
            columns=bad,
        )

    tss = float(((y - y.mean()) ** 2).sum())
    if tss <= 0.0:
        raise DegenerateVariance("outcome has zero variance")

    Q, R = np.linalg.qr(Xd)
    coef_all = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - Xd @ coef_all
    rss = float(resid @ resid)
    df = n - (k + 1)
    sigma2 = rss / df
    r_inv = scipy.linalg.solve_triangular(R, np.eye(k + 1))
    xtx_inv = r_inv @ r_inv.T
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_values = np.where(se > 0, coef_all / se, np.inf * np.sign(coef_all))
    p_values = 2.0 * scipy.stats.t.sf(np.abs(t_values), df)
    t_crit = float(scipy.stats.t.ppf(0.975, df))

    r2 = 1.0 - rss / tss
    adj_r2 = 1.0 - (rss / df) / (tss / (n - 1))

    return OlsFit(
        feature_names=tuple(feature_names),
        intercept=float(coef_all[0]),
        coef=coef_all[1:],
        std_errors=se,
        t_values=t_values,
        p_values=p_values,
        ci_low=coef_all - t_crit * se,
        ci_high=coef_all + t_crit * se,
        r_squared=r2,
        adj_r_squared=adj_r2,
        sigma2=sigma2,
        n_obs=n,
        df_resid=df,
        xtx_inv=xtx_inv,
    )


def vif(X: np.ndarray, feature_names: tuple[str, ...]) -> dict[str, float]:
    """Variance inflation factor per column: 1 / (1 - R^2 of column on rest).

    Raises PerfectCollinearity when a column is (numerically) an exact
    linear combination of the others.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(feature_names):
        raise ValidationError("feature_names must match the column count")
    n, k = X.shape
    out: dict[str, float] = {}
    for j in range(k):
        target = X[:, j]
        others = np.delete(X, j, axis=1)
        Xd = np.concatenate([np.ones((n, 1)), others], axis=1)
        coef, *_ = np.linalg.lstsq(Xd, target, rcond=None)
        resid = target - Xd @ coef
        tss = float(((target - target.mean()) ** 2).sum())
        if tss <= 0.0:
            raise DegenerateVariance(f"column {feature_names[j]} is constant")
        r2 = 1.0 - float(resid @ resid) / tss
        if r2 >= VIF_R2_LIMIT:
            raise PerfectCollinearity(
                f"column {feature_names[j]} is collinear with the others"
            )
        out[feature_names[j]] = 1.0 / (1.0 - r2)
    return out


def significant_subset(fit: OlsFit, alpha: float = 0.1) -> tuple[str, ...]:
    """Features with p strictly below alpha, in the fit's column order.

    The intercept never qualifies. Raises NoSignificantFeatures when the
    screen leaves nothing.
    """
    keep = tuple(
        name
        for name, p in zip(fit.feature_names, fit.p_values[1:])
        if p < alpha
    )
    if not keep:
        raise NoSignificantFeatures(f"no feature has p < {alpha}")
    return keep
