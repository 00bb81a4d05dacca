"""Generalized ordered logit for four-level congestion states.

The model keeps one threshold and one full coefficient vector per cumulative
split j: P(level > j | x) = logistic(alpha_j + x . beta_j), j = 1..M-1, so
effects may differ across splits (no proportional-odds constraint).
Category probabilities are differences of adjacent split curves. Marginal
effects follow the three-case derivative of those differences.

Maximum likelihood runs a quasi-Newton (BFGS) pass followed by an exact
Newton polish using the analytic observed information, which also supplies
the coefficient covariance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from datetime import time

import numpy as np
import pandas as pd
import scipy.optimize
from scipy.special import expit, ndtr

from .errors import (
    EmptyCategory,
    IndexOutOfRange,
    NegativeProbability,
    NonFiniteLikelihood,
    NotConverged,
    SeparationDetected,
    SingularCovariance,
    UnconvergedFit,
    ValidationError,
)

PROB_CLAMP = 1e-12
SEPARATION_MAX_NORM = 50.0
NEG_PROB_TOL = -1e-12

CATEGORY_LABELS = ("smooth", "slow", "congested", "severely_congested")


@dataclass(frozen=True)
class FitOptions:
    """Optimizer knobs. ``gtol`` is a per-unit-weight gradient tolerance:
    a fit counts as converged when the max-norm of the score falls below
    ``gtol`` times the total observation weight."""

    gtol: float = 1e-6
    max_iter: int = 500


@dataclass(frozen=True)
class GologitSpec:
    """Model shape: number of ordered categories and feature names.

    An empty feature tuple is allowed and produces an intercept-only model
    (all splits carry just their threshold).
    """

    n_categories: int = 4
    feature_names: tuple[str, ...] = ("work", "school", "exam")
    options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.n_categories < 2:
            raise ValidationError("need at least 2 ordered categories")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValidationError("duplicate feature names")

    @property
    def n_splits(self) -> int:
        return self.n_categories - 1

    @property
    def n_params(self) -> int:
        return self.n_splits * (1 + len(self.feature_names))


@dataclass
class GologitData:
    """Design matrix, ordinal outcome in 1..M, optional row weights."""

    X: np.ndarray
    y: np.ndarray
    n_categories: int
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValidationError("X must be (n, K) with one row per outcome")
        if not np.isfinite(self.X).all():
            raise ValidationError("X contains non-finite values")
        if self.y.min(initial=self.n_categories) < 1 or self.y.max(initial=1) > self.n_categories:
            raise ValidationError(f"levels must lie in 1..{self.n_categories}")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if (self.weights < 0).any():
                raise ValidationError("weights must be non-negative")

    @property
    def w(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.y))
        return self.weights

    @property
    def n_obs(self) -> float:
        return float(self.w.sum())


def _unpack(theta: np.ndarray, n_splits: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    blocks = np.asarray(theta, dtype=float).reshape(n_splits, k + 1)
    return blocks[:, 0].copy(), blocks[:, 1:].copy()


def _pack(alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    return np.concatenate([np.column_stack([alphas, betas]).ravel()])


def _split_curves(alphas: np.ndarray, betas: np.ndarray, X: np.ndarray) -> np.ndarray:
    """G[i, j] = P(level > j+1 | x_i), shape (n, M-1)."""
    return expit(alphas[None, :] + X @ betas.T)


def _category_probs_from_G(G: np.ndarray) -> np.ndarray:
    """(n, M) category probabilities as adjacent differences of splits."""
    n = len(G)
    ext = np.concatenate(
        [np.ones((n, 1)), G, np.zeros((n, 1))], axis=1
    )  # P(level > 0) = 1, P(level > M) = 0
    return ext[:, :-1] - ext[:, 1:]


# ---------------------------------------------------------------------------
# probabilities

def cum_prob(fit, x, j: int) -> float:
    """P(level > j | x) for split j in 1..M-1. Saturates cleanly at 0/1."""
    alphas, betas = _fit_params(fit)
    m_splits = len(alphas)
    if not (1 <= j <= m_splits):
        raise IndexOutOfRange(f"split {j} outside 1..{m_splits}")
    x = np.asarray(x, dtype=float)
    return float(expit(alphas[j - 1] + x @ betas[j - 1]))


def category_probs(fit, x) -> np.ndarray:
    """All M category probabilities at x; they sum to 1 by construction.

    Raises NegativeProbability when split curves cross hard enough to push
    a probability below -1e-12.
    """
    alphas, betas = _fit_params(fit)
    x = np.asarray(x, dtype=float)[None, :]
    G = _split_curves(alphas, betas, x)
    probs = _category_probs_from_G(G)[0]
    if (probs < NEG_PROB_TOL).any():
        j = int(np.argmin(probs))
        raise NegativeProbability(
            f"P(level={j + 1}) = {probs[j]:.3e} < 0; splits cross at this x"
        )
    return np.clip(probs, 0.0, None)


def _fit_params(fit) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(fit, GologitFit):
        return fit.alphas, fit.betas
    alphas, betas = fit
    return np.asarray(alphas, dtype=float), np.atleast_2d(np.asarray(betas, dtype=float))


# ---------------------------------------------------------------------------
# likelihood, gradient, Hessian

def _loglik_parts(
    theta: np.ndarray, data: GologitData, clamp: bool
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shared likelihood plumbing.

    Returns (loglik, grad, G, p, p_used): split curves, raw category
    probability of the observed level, and the (possibly clamped) version
    that entered logs and denominators.
    """
    n_splits = data.n_categories - 1
    k = data.X.shape[1]
    alphas, betas = _unpack(theta, n_splits, k)
    G = _split_curves(alphas, betas, data.X)
    n = len(data.y)
    ext = np.concatenate([np.ones((n, 1)), G, np.zeros((n, 1))], axis=1)
    idx = np.arange(n)
    p = ext[idx, data.y - 1] - ext[idx, data.y]
    if clamp:
        p_used = np.maximum(p, PROB_CLAMP)
    else:
        if (p <= 0).any():
            bad = int(np.argmax(p <= 0))
            raise NonFiniteLikelihood(
                f"observation {bad} has probability {p[bad]:.3e} <= 0"
            )
        p_used = p
    wt = data.w
    ll = float(wt @ np.log(p_used))

    W = G * (1.0 - G)  # logistic densities at each split, (n, M-1)
    # score wrt eta_j: +w_j/p when split j is the minuend (y = j+1),
    # -w_j/p when it is the subtrahend (y = j)
    S = np.zeros_like(G)
    y = data.y
    for j in range(1, n_splits + 1):
        col = j - 1
        minuend = y == j + 1
        subtrahend = y == j
        S[minuend, col] += W[minuend, col] / p_used[minuend]
        S[subtrahend, col] -= W[subtrahend, col] / p_used[subtrahend]

    Sw = S * wt[:, None]
    grad_blocks = np.empty((n_splits, k + 1))
    grad_blocks[:, 0] = Sw.sum(axis=0)
    grad_blocks[:, 1:] = Sw.T @ data.X
    return ll, grad_blocks.ravel(), G, p, p_used


def log_likelihood(theta: np.ndarray, data: GologitData) -> tuple[float, np.ndarray]:
    """Exact weighted log-likelihood and its analytic gradient.

    Raises NonFiniteLikelihood when any data point has probability <= 0 at
    these parameters (the fitting path clamps instead).
    """
    ll, grad, *_ = _loglik_parts(np.asarray(theta, dtype=float), data, clamp=False)
    return ll, grad


def _hessian(theta: np.ndarray, data: GologitData) -> np.ndarray:
    """Analytic Hessian of the (clamped) log-likelihood, block tridiagonal."""
    n_splits = data.n_categories - 1
    k = data.X.shape[1]
    alphas, betas = _unpack(theta, n_splits, k)
    G = _split_curves(alphas, betas, data.X)
    n = len(data.y)
    ext = np.concatenate([np.ones((n, 1)), G, np.zeros((n, 1))], axis=1)
    idx = np.arange(n)
    p = np.maximum(ext[idx, data.y - 1] - ext[idx, data.y], PROB_CLAMP)
    W = G * (1.0 - G)
    Wp = W * (1.0 - 2.0 * G)  # derivative of the logistic density
    wt = data.w
    y = data.y
    Z = np.concatenate([np.ones((n, 1)), data.X], axis=1)
    dim = n_splits * (k + 1)
    H = np.zeros((dim, dim))

    def block(a: int, b: int, coef: np.ndarray) -> None:
        part = Z.T @ (Z * (coef * wt)[:, None])
        ra = slice(a * (k + 1), (a + 1) * (k + 1))
        rb = slice(b * (k + 1), (b + 1) * (k + 1))
        H[ra, rb] += part
        if a != b:
            H[rb, ra] += part.T

    for j in range(1, n_splits + 1):
        col = j - 1
        coef = np.zeros(n)
        minuend = y == j + 1
        subtrahend = y == j
        coef[minuend] = (
            Wp[minuend, col] / p[minuend] - (W[minuend, col] / p[minuend]) ** 2
        )
        coef[subtrahend] = (
            -Wp[subtrahend, col] / p[subtrahend]
            - (W[subtrahend, col] / p[subtrahend]) ** 2
        )
        block(col, col, coef)
        if j + 1 <= n_splits:
            # observations with y = j+1 touch both split j and split j+1
            cross = np.zeros(n)
            cross[minuend] = (
                W[minuend, col] * W[minuend, col + 1] / p[minuend] ** 2
            )
            block(col, col + 1, cross)
    return H


# ---------------------------------------------------------------------------
# fitting

@dataclass
class GologitFit:
    spec: GologitSpec
    alphas: np.ndarray  # (M-1,)
    betas: np.ndarray  # (M-1, K)
    covariance: np.ndarray | None
    loglik: float
    converged: bool
    n_obs: float
    n_iter: int
    gradient_max_norm: float
    negative_prob_rows: int = 0

    @property
    def theta(self) -> np.ndarray:
        return _pack(self.alphas, self.betas)

    def param_names(self) -> list[str]:
        names = []
        for j in range(1, len(self.alphas) + 1):
            names.append(f"alpha:{j}")
            names.extend(f"{f}:{j}" for f in self.spec.feature_names)
        return names

    def to_dict(self) -> dict:
        return {
            "n_categories": self.spec.n_categories,
            "feature_names": list(self.spec.feature_names),
            "alphas": [float(a) for a in self.alphas],
            "betas": [[float(b) for b in row] for row in self.betas],
            "covariance": None
            if self.covariance is None
            else [[float(v) for v in row] for row in self.covariance],
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "n_obs": float(self.n_obs),
            "n_iter": int(self.n_iter),
            "gradient_max_norm": float(self.gradient_max_norm),
            "negative_prob_rows": int(self.negative_prob_rows),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GologitFit":
        spec = GologitSpec(
            n_categories=int(doc["n_categories"]),
            feature_names=tuple(doc["feature_names"]),
        )
        return cls(
            spec=spec,
            alphas=np.asarray(doc["alphas"], dtype=float),
            betas=np.asarray(doc["betas"], dtype=float).reshape(
                spec.n_splits, len(spec.feature_names)
            ),
            covariance=None
            if doc["covariance"] is None
            else np.asarray(doc["covariance"], dtype=float),
            loglik=float(doc["loglik"]),
            converged=bool(doc["converged"]),
            n_obs=float(doc["n_obs"]),
            n_iter=int(doc["n_iter"]),
            gradient_max_norm=float(doc["gradient_max_norm"]),
            negative_prob_rows=int(doc.get("negative_prob_rows", 0)),
        )


def _start_values(data: GologitData, n_splits: int, k: int) -> np.ndarray:
    wt = data.w
    total = wt.sum()
    alphas = np.empty(n_splits)
    for j in range(1, n_splits + 1):
        share = float(wt[data.y > j].sum() / total)
        share = min(max(share, 1e-6), 1.0 - 1e-6)
        alphas[j - 1] = np.log(share / (1.0 - share))
    theta0 = np.zeros((n_splits, k + 1))
    theta0[:, 0] = alphas
    return theta0.ravel()


def fit_gologit(
    spec: GologitSpec, data: GologitData, strict: bool = False
) -> GologitFit:
    """Maximum likelihood fit.

    BFGS with the analytic gradient, then Newton polish on the analytic
    Hessian until the gradient max-norm is well under the tolerance, which
    makes the optimum insensitive to observation order. Covariance is the
    inverse observed information at the optimum.
    """
    if data.n_categories != spec.n_categories:
        raise ValidationError("spec and data disagree on the number of categories")
    k = data.X.shape[1]
    if k != len(spec.feature_names):
        raise ValidationError("spec and data disagree on the feature count")
    n_splits = spec.n_splits

    wt = data.w
    for level in range(1, spec.n_categories + 1):
        if float(wt[data.y == level].sum()) <= 0.0:
            raise EmptyCategory(f"level {level} never occurs in the data")

    theta0 = _start_values(data, n_splits, k)

    def objective(theta):
        ll, grad, *_ = _loglik_parts(theta, data, clamp=True)
        return -ll, -grad

    res = scipy.optimize.minimize(
        objective,
        theta0,
        jac=True,
        method="BFGS",
        options={"gtol": spec.options.gtol, "maxiter": spec.options.max_iter},
    )
    theta = np.asarray(res.x, dtype=float)
    n_iter = int(res.nit)

    if np.abs(theta).max(initial=0.0) > SEPARATION_MAX_NORM:
        raise SeparationDetected(
            f"coefficient max-norm {np.abs(theta).max():.1f} exceeds "
            f"{SEPARATION_MAX_NORM}; outcome is separable"
        )

    # Newton polish: quadratic convergence to the exact stationary point
    ll, grad, *_ = _loglik_parts(theta, data, clamp=True)
    for _ in range(40):
        gmax = float(np.abs(grad).max(initial=0.0))
        if gmax < 1e-10 * max(1.0, abs(ll)):
            break
        H = _hessian(theta, data)
        try:
            step = np.linalg.solve(-H, grad)
        except np.linalg.LinAlgError:
            break
        if not np.isfinite(step).all():
            break
        t, accepted = 1.0, False
        slope = float(grad @ step)
        if slope <= 0:
            break
        if slope < 1e-12 * max(1.0, abs(ll)):
            # Predicted gain is below the float resolution of the summed
            # log-likelihood, so a sufficient-decrease test cannot certify
            # anything. Trust the quadratic model for one full step as long
            # as it actually shrinks the gradient.
            cand = theta + step
            ll_c, grad_c, *_ = _loglik_parts(cand, data, clamp=True)
            if float(np.abs(grad_c).max(initial=0.0)) < gmax:
                theta, ll, grad = cand, ll_c, grad_c
                n_iter += 1
                continue
            break
        for _ in range(30):
            cand = theta + t * step
            ll_c, grad_c, *_ = _loglik_parts(cand, data, clamp=True)
            if ll_c >= ll + 1e-4 * t * slope:
                theta, ll, grad = cand, ll_c, grad_c
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        n_iter += 1
        if np.abs(theta).max() > SEPARATION_MAX_NORM:
            raise SeparationDetected(
                f"coefficient max-norm {np.abs(theta).max():.1f} exceeds "
                f"{SEPARATION_MAX_NORM}; outcome is separable"
            )

    gmax = float(np.abs(grad).max(initial=0.0))
    # the objective is a weighted sum, so the tolerance scales with the
    # total weight to stay meaningful across sample sizes
    converged = gmax < spec.options.gtol * max(1.0, float(wt.sum()))
    if not converged:
        if strict:
            raise NotConverged(
                f"gradient max-norm {gmax:.2e} after {n_iter} iterations"
            )
        warnings.warn(
            f"gologit fit stopped at gradient max-norm {gmax:.2e}; "
            "reporting the best iterate",
            stacklevel=2,
        )

    covariance: np.ndarray | None
    try:
        info = -_hessian(theta, data)
        covariance = np.linalg.solve(info, np.eye(len(theta)))
        covariance = (covariance + covariance.T) / 2.0
        if not np.isfinite(covariance).all():
            covariance = None
    except np.linalg.LinAlgError:
        covariance = None

    alphas, betas = _unpack(theta, n_splits, k)
    G = _split_curves(alphas, betas, data.X)
    probs = _category_probs_from_G(G)
    negative_rows = int((probs < NEG_PROB_TOL).any(axis=1).sum())
    if negative_rows:
        warnings.warn(
            f"{negative_rows} rows have a negative predicted category "
            "probability (split curves cross)",
            stacklevel=2,
        )

    return GologitFit(
        spec=spec,
        alphas=alphas,
        betas=betas,
        covariance=covariance,
        loglik=ll,
        converged=converged,
        n_obs=data.n_obs,
        n_iter=n_iter,
        gradient_max_norm=gmax,
        negative_prob_rows=negative_rows,
    )


# ---------------------------------------------------------------------------
# marginal effects

@dataclass
class MarginalEffects:
    mode: str  # "AME" or "MEM"
    feature_names: tuple[str, ...]
    effects: np.ndarray  # (M, K): d P(level=j) / d x_k
    std_errors: np.ndarray  # (M, K), delta method
    p_values: np.ndarray  # (M, K), two-sided normal

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "feature_names": list(self.feature_names),
            "effects": [[float(v) for v in row] for row in self.effects],
            "std_errors": [[float(v) for v in row] for row in self.std_errors],
            "p_values": [[float(v) for v in row] for row in self.p_values],
        }


def marginal_effects(
    fit: GologitFit, data: GologitData, mode: str = "AME"
) -> MarginalEffects:
    """Derivative of each category probability wrt each feature.

    Three cases collapse into one telescoping form with zero-padded edges:
    d P(level=j)/dx = w_{j-1} beta_{j-1} - w_j beta_j, where w_j is the
    logistic density at split j and w_0 = w_M = 0. Columns therefore sum to
    zero across categories. AME averages over the sample; MEM evaluates at
    the feature means. Standard errors use the delta method on the fit
    covariance. Dummies are treated as continuous here; see
    discrete_changes for the finite-difference variant.
    """
    if mode not in ("AME", "MEM"):
        raise ValidationError(f"unknown mode {mode!r}")
    if not fit.converged:
        raise UnconvergedFit("marginal effects need a converged fit")
    if fit.covariance is None:
        raise SingularCovariance("fit covariance unavailable")

    n_splits = fit.spec.n_splits
    k = len(fit.spec.feature_names)
    M = fit.spec.n_categories
    wt = data.w
    total = wt.sum()

    if mode == "AME":
        X_eval = data.X
        weights = wt / total
    else:
        X_eval = np.average(data.X, axis=0, weights=wt)[None, :]
        weights = np.ones(1)

    G = _split_curves(fit.alphas, fit.betas, X_eval)
    W = G * (1.0 - G)
    Wp = W * (1.0 - 2.0 * G)

    # weighted moments that the effects and their Jacobian are built from
    C = weights @ W  # (M-1,) mean logistic density per split
    A = weights @ Wp  # (M-1,) mean density derivative per split
    B = (Wp * weights[:, None]).T @ X_eval  # B[m, l] = mean of Wp_m * x_l

    beta_ext = np.vstack([np.zeros(k), fit.betas, np.zeros(k)])  # rows 0..M
    C_ext = np.concatenate([[0.0], C, [0.0]])

    effects = np.empty((M, k))
    for j in range(1, M + 1):
        effects[j - 1] = C_ext[j - 1] * beta_ext[j - 1] - C_ext[j] * beta_ext[j]

    cov = fit.covariance
    std_errors = np.empty((M, k))
    blk = k + 1
    for j in range(1, M + 1):
        for kk in range(k):
            jac = np.zeros(n_splits * blk)
            for m, sign in ((j - 1, +1.0), (j, -1.0)):
                if not (1 <= m <= n_splits):
                    continue
                base = (m - 1) * blk
                b_mk = fit.betas[m - 1, kk]
                jac[base] += sign * A[m - 1] * b_mk
                jac[base + 1 : base + 1 + k] += sign * B[m - 1] * b_mk
                jac[base + 1 + kk] += sign * C[m - 1]
            std_errors[j - 1, kk] = float(np.sqrt(max(jac @ cov @ jac, 0.0)))

    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std_errors > 0, effects / std_errors, 0.0)
    p_values = 2.0 * ndtr(-np.abs(z))

    return MarginalEffects(
        mode=mode,
        feature_names=fit.spec.feature_names,
        effects=effects,
        std_errors=std_errors,
        p_values=p_values,
    )


def discrete_changes(fit: GologitFit, data: GologitData) -> np.ndarray:
    """(M, K) average change in category probabilities flipping each dummy 0->1."""
    if not fit.converged:
        raise UnconvergedFit("discrete changes need a converged fit")
    k = len(fit.spec.feature_names)
    M = fit.spec.n_categories
    wt = data.w
    total = wt.sum()
    out = np.empty((M, k))
    for kk in range(k):
        X1 = data.X.copy()
        X0 = data.X.copy()
        X1[:, kk] = 1.0
        X0[:, kk] = 0.0
        p1 = _category_probs_from_G(_split_curves(fit.alphas, fit.betas, X1))
        p0 = _category_probs_from_G(_split_curves(fit.alphas, fit.betas, X0))
        out[:, kk] = (wt[:, None] * (p1 - p0)).sum(axis=0) / total
    return out


# ---------------------------------------------------------------------------
# Wald inference

@dataclass
class WaldTable:
    names: tuple[str, ...]
    estimates: np.ndarray
    std_errors: np.ndarray
    z: np.ndarray
    p: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "estimates": [float(v) for v in self.estimates],
            "std_errors": [float(v) for v in self.std_errors],
            "z": [float(v) for v in self.z],
            "p": [float(v) for v in self.p],
            "ci_low": [float(v) for v in self.ci_low],
            "ci_high": [float(v) for v in self.ci_high],
        }


def wald_tests(fit: GologitFit) -> WaldTable:
    """Per-coefficient z statistics, two-sided normal p, and 1.96-se CIs."""
    if fit.covariance is None:
        raise SingularCovariance("fit covariance unavailable")
    est = fit.theta
    var = np.diag(fit.covariance)
    if (var < 0).any() or not np.isfinite(var).all():
        raise SingularCovariance("covariance diagonal is not usable")
    se = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, est / se, np.inf * np.sign(est))
    p = 2.0 * ndtr(-np.abs(z))
    return WaldTable(
        names=tuple(fit.param_names()),
        estimates=est,
        std_errors=se,
        z=z,
        p=p,
        ci_low=est - 1.96 * se,
        ci_high=est + 1.96 * se,
    )


# ---------------------------------------------------------------------------
# the two DID designs and the combined report

def build_did_design(observations: pd.DataFrame, calendar) -> GologitData:
    """work / school / exam dummies for every observation in the study week."""
    from .ingest.timeslots import label_timeslot

    slots = {}
    for ts in observations["timestamp"].unique():
        slot = label_timeslot(ts, calendar)
        slots[ts] = (slot.work, slot.school, slot.exam)
    X = np.asarray([slots[ts] for ts in observations["timestamp"]], dtype=float)
    return GologitData(X=X, y=observations["level"].to_numpy(), n_categories=4)


def commute_day_arms(calendar) -> tuple[set, set, set]:
    """(school-run days, commute-without-school days, baseline weekend days).

    Commute-without-school days are workdays with no school runs and no
    morning exam sitting; baseline weekend days exclude exam days entirely.
    """
    exam_dates = calendar.exam_days()
    morning_exam_dates = {w.day for w in calendar.exam_windows if w.start < time(12, 0)}
    extra_exam = calendar.extra_exam_days
    school_days = set(calendar.school_run_days)
    workdays = {
        d
        for d in calendar.study_days()
        if d not in calendar.weekend_days
    }
    no_school = {
        d
        for d in workdays - school_days
        if d not in morning_exam_dates and d not in extra_exam
    }
    baseline = {
        d
        for d in calendar.weekend_days
        if d not in exam_dates and d not in extra_exam
    }
    return school_days, no_school, baseline


def build_commute_design(
    observations: pd.DataFrame, calendar
) -> GologitData:
    """Morning-commute subsample with school-run vs no-school-run dummies.

    Rows: observations in the morning commute hours on school-run days,
    clean no-school workdays, and exam-free weekend days (the baseline).
    """
    school_days, no_school_days, baseline_days = commute_day_arms(calendar)
    eligible = school_days | no_school_days | baseline_days

    ts = observations["timestamp"]
    keep = np.asarray(
        [t.date() in eligible and calendar.is_morning_commute(t) for t in ts],
        dtype=bool,
    )
    sub = observations.loc[keep]
    if sub.empty:
        raise ValidationError("no observations in the commute comparison sample")
    X = np.asarray(
        [
            (
                1.0 if t.date() in school_days else 0.0,
                1.0 if t.date() in no_school_days else 0.0,
            )
            for t in sub["timestamp"]
        ],
        dtype=float,
    )
    return GologitData(X=X, y=sub["level"].to_numpy(), n_categories=4)


@dataclass
class DidRow:
    model: str
    dummy: str
    category: str
    effect: float  # marginal effect, probability units
    std_error: float
    p: float


@dataclass
class DidReport:
    rows: list[DidRow]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "model": [r.model for r in self.rows],
                "dummy": [r.dummy for r in self.rows],
                "category": [r.category for r in self.rows],
                "effect_pct": [r.effect * 100.0 for r in self.rows],
                "se_pct": [r.std_error * 100.0 for r in self.rows],
                "p": [r.p for r in self.rows],
            }
        )

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def did_report(
    fit_within: GologitFit,
    data_within: GologitData,
    fit_commute: GologitFit,
    data_commute: GologitData,
) -> DidReport:
    """Average marginal effects for both DID designs, one row per
    dummy x category, effects in percentage points at CSV time."""
    rows: list[DidRow] = []
    for model, fit, data in (
        ("within_week", fit_within, data_within),
        ("commute_decomposition", fit_commute, data_commute),
    ):
        ame = marginal_effects(fit, data, mode="AME")
        for kk, dummy in enumerate(fit.spec.feature_names):
            for j, label in enumerate(CATEGORY_LABELS[: fit.spec.n_categories]):
                rows.append(
                    DidRow(
                        model=model,
                        dummy=dummy,
                        category=label,
                        effect=float(ame.effects[j, kk]),
                        std_error=float(ame.std_errors[j, kk]),
                        p=float(ame.p_values[j, kk]),
                    )
                )
    return DidReport(rows=rows)
