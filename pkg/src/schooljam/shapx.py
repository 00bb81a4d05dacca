"""Shapley attribution for congestion-frequency predictions.

Coalition values are conditional-expectation composites: features in the
coalition come from the instance, the rest from background rows, and the
model output is averaged over the background. Up to 20 features the
attribution enumerates every coalition exactly; from 21 to 25 it switches
to seeded antithetic permutation sampling; beyond that it refuses. Pairwise
interaction indices are exact and capped at 14 features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    EmptyInput,
    ModelNotLinear,
    NonFiniteModelOutput,
    TooManyFeatures,
    ValidationError,
)

EXACT_LIMIT = 20
SAMPLED_LIMIT = 25
INTERACTION_LIMIT = 14
N_PERMUTATION_PAIRS = 1000
LINEAR_CHECK_ATOL = 1e-8

Model = Callable[[np.ndarray], np.ndarray]


@dataclass
class ShapResult:
    phi: np.ndarray  # (M,) per-feature attribution
    base_value: float  # mean model output on the background
    fx: float  # model output at the instance
    method: str  # "exact", "sampled", or "linear"

    @property
    def additive_residual(self) -> float:
        return float(self.fx - self.base_value - self.phi.sum())


def _eval_model(model: Model, rows: np.ndarray) -> np.ndarray:
    out = np.asarray(model(rows), dtype=float).reshape(-1)
    if len(out) != len(rows):
        raise ValidationError("model must return one value per input row")
    if not np.isfinite(out).all():
        raise NonFiniteModelOutput("model produced a non-finite value")
    return out


def _check_inputs(x: np.ndarray, background: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if background.shape[1] != len(x):
        raise ValidationError("background columns must match the instance length")
    if len(background) == 0:
        raise EmptyInput("background must contain at least one row")
    if not (np.isfinite(x).all() and np.isfinite(background).all()):
        raise ValidationError("non-finite values in instance or background")
    return x, background


def _coalition_values(
    model: Model, x: np.ndarray, background: np.ndarray
) -> np.ndarray:
    """v[mask] for every coalition mask, averaging over background rows."""
    m = len(x)
    n_masks = 1 << m
    n_bg = len(background)
    v = np.empty(n_masks)
    chunk = max(1, (1 << 16) // n_bg)
    bits = np.arange(m)
    for lo in range(0, n_masks, chunk):
        masks = np.arange(lo, min(lo + chunk, n_masks))
        member = ((masks[:, None] >> bits[None, :]) & 1).astype(bool)  # (c, m)
        comp = np.where(member[:, None, :], x[None, None, :], background[None, :, :])
        out = _eval_model(model, comp.reshape(-1, m)).reshape(len(masks), n_bg)
        v[lo : lo + len(masks)] = out.mean(axis=1)
    return v


def _popcounts(n_masks: int) -> np.ndarray:
    pc = np.zeros(n_masks, dtype=np.int64)
    for mask in range(1, n_masks):
        pc[mask] = pc[mask >> 1] + (mask & 1)
    return pc


def _phi_from_values(v: np.ndarray, m: int) -> np.ndarray:
    """Exact Shapley values out of the full coalition-value table."""
    n_masks = len(v)
    pc = _popcounts(n_masks)
    weights = np.array(
        [1.0 / (m * math.comb(m - 1, s)) for s in range(m)]
    )
    masks = np.arange(n_masks)
    phi = np.empty(m)
    for i in range(m):
        without = (masks >> i) & 1 == 0
        base = masks[without]
        phi[i] = float(
            (weights[pc[base]] * (v[base | (1 << i)] - v[base])).sum()
        )
    return phi


def shapley_exact(
    model: Model, x, background, seed: int | None = None
) -> ShapResult:
    """Per-feature attribution of f(x) against the background mean.

    Exact coalition enumeration up to 20 features. Between 21 and 25 a seed
    selects antithetic permutation sampling; without one, or past 25
    features, TooManyFeatures is raised. The attributions always satisfy
    sum(phi) = f(x) - mean f(background).
    """
    x, background = _check_inputs(x, background)
    m = len(x)
    if m == 0:
        raise EmptyInput("instance has no features")
    if m > SAMPLED_LIMIT:
        raise TooManyFeatures(f"{m} features exceeds the hard cap of {SAMPLED_LIMIT}")
    fx = float(_eval_model(model, x[None, :])[0])
    base = float(_eval_model(model, background).mean())
    if m <= EXACT_LIMIT:
        v = _coalition_values(model, x, background)
        phi = _phi_from_values(v, m)
        return ShapResult(phi=phi, base_value=base, fx=fx, method="exact")
    if seed is None:
        raise TooManyFeatures(
            f"{m} features needs seeded sampling; pass a seed (exact tops out at {EXACT_LIMIT})"
        )
    phi = _sampled_phi(model, x, background, seed)
    return ShapResult(phi=phi, base_value=base, fx=fx, method="sampled")


def _sampled_phi(
    model: Model, x: np.ndarray, background: np.ndarray, seed: int
) -> np.ndarray:
    """Antithetic permutation sampling: each draw is used forward and
    reversed, and every permutation's contributions telescope, so the
    additivity identity holds exactly no matter the sample size."""
    m = len(x)
    n_bg = len(background)
    rng = np.random.default_rng(seed)
    total = np.zeros(m)
    count = 0
    for _ in range(N_PERMUTATION_PAIRS):
        perm = rng.permutation(m)
        for order in (perm, perm[::-1]):
            comp = np.repeat(background[None, :, :], m + 1, axis=0)
            for t, feat in enumerate(order, start=1):
                comp[t:, :, feat] = x[feat]
            out = _eval_model(model, comp.reshape(-1, m)).reshape(m + 1, n_bg)
            v_chain = out.mean(axis=1)
            total[order] += np.diff(v_chain)
            count += 1
    return total / count


def shapley_linear(model, x, background) -> ShapResult:
    """Closed-form attribution for an affine model.

    Accepts a fitted linear regression (its coefficients are trusted) or a
    callable, whose implied slopes are probed with unit steps and then
    verified at the instance and a midpoint; a callable that fails the
    check raises ModelNotLinear. For affine f the exact Shapley value
    collapses to beta_i * (x_i - background_mean_i).
    """
    x, background = _check_inputs(x, background)
    mean = background.mean(axis=0)
    if hasattr(model, "predict") and hasattr(model, "coef"):
        coef = np.asarray(model.coef, dtype=float)
        if len(coef) != len(x):
            raise ValidationError("fit coefficient count must match the instance")
        fx = float(model.predict(x[None, :])[0])
        base = float(model.predict(background).mean())
        f_mean = float(model.predict(mean[None, :])[0])
    else:
        f_mean = float(_eval_model(model, mean[None, :])[0])
        steps = mean[None, :] + np.eye(len(x))
        coef = _eval_model(model, steps) - f_mean
        fx = float(_eval_model(model, x[None, :])[0])
        base = float(_eval_model(model, background).mean())
        for probe in (x, (x + mean) / 2.0):
            predicted = f_mean + float(coef @ (probe - mean))
            actual = float(_eval_model(model, probe[None, :])[0])
            scale = max(1.0, abs(actual))
            if abs(predicted - actual) > LINEAR_CHECK_ATOL * scale:
                raise ModelNotLinear(
                    f"model deviates from affine by {abs(predicted - actual):.3e}"
                )
        # affine models evaluated at the background mean equal the mean of
        # evaluations, so base and f_mean agree; keep base for the identity
    phi = coef * (x - mean)
    return ShapResult(phi=phi, base_value=base, fx=fx, method="linear")


def shap_importance(
    phi_rows: np.ndarray, feature_names: tuple[str, ...]
) -> list[tuple[str, float]]:
    """Mean absolute attribution per feature, sorted descending.

    Ties keep the input feature order. Raises EmptyInput when there are no
    attribution rows to average.
    """
    phi_rows = np.atleast_2d(np.asarray(phi_rows, dtype=float))
    if phi_rows.size == 0 or len(phi_rows) == 0:
        raise EmptyInput("no attribution rows")
    if phi_rows.shape[1] != len(feature_names):
        raise ValidationError("feature_names must match the attribution width")
    imp = np.abs(phi_rows).mean(axis=0)
    order = np.argsort(-imp, kind="stable")
    return [(feature_names[i], float(imp[i])) for i in order]


def shap_interactions(model: Model, x, background) -> np.ndarray:
    """Symmetric (M, M) Shapley interaction matrix, exact, M <= 14.

    Off-diagonal entries split each pairwise synergy evenly between the two
    features; the diagonal keeps whatever main effect is left, so each row
    sums to that feature's Shapley value.
    """
    x, background = _check_inputs(x, background)
    m = len(x)
    if m > INTERACTION_LIMIT:
        raise TooManyFeatures(
            f"{m} features exceeds the interaction cap of {INTERACTION_LIMIT}"
        )
    if m == 0:
        raise EmptyInput("instance has no features")
    v = _coalition_values(model, x, background)
    phi = _phi_from_values(v, m)
    out = np.zeros((m, m))
    if m == 1:
        out[0, 0] = phi[0]
        return out

    pc = _popcounts(len(v))
    masks = np.arange(len(v))
    weights = np.array(
        [1.0 / (2.0 * (m - 1) * math.comb(m - 2, s)) for s in range(m - 1)]
    )
    for i in range(m):
        for j in range(i + 1, m):
            free = ((masks >> i) & 1 == 0) & ((masks >> j) & 1 == 0)
            base = masks[free]
            delta = (
                v[base | (1 << i) | (1 << j)]
                - v[base | (1 << i)]
                - v[base | (1 << j)]
                + v[base]
            )
            val = float((weights[pc[base]] * delta).sum())
            out[i, j] = val
            out[j, i] = val
    for i in range(m):
        out[i, i] = phi[i] - (out[i].sum() - out[i, i])
    return out


def additive_check(result: ShapResult, atol: float = 1e-8) -> float:
    """Residual of the additivity identity; raises if it exceeds atol."""
    resid = result.additive_residual
    if abs(resid) > atol:
        raise ValidationError(
            f"attributions miss f(x) - base by {resid:.3e} (tolerance {atol:.1e})"
        )
    return resid
