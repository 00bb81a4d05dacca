"""Built-environment scoring around school neighborhoods.

The regression coefficients that survive the significance screen are
rescaled by the largest absolute one, so weights live in [-1, 1] and the
strongest feature carries weight exactly one in magnitude. A school's jam
score is the weighted sum of its z-scored features; the environment score
is the constant alpha minus that, so the two always add up to alpha. Alpha
defaults to 14, high enough to keep environment scores positive on
realistic inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .domain import FeatureVector
from .errors import DegenerateVariance, MissingFeature, ValidationError
from .ols import OlsFit

DEFAULT_ALPHA = 14.0


@dataclass(frozen=True)
class ScoringFunction:
    """Persistable scorer: normalized weights plus the z-score statistics.

    Raw feature values are standardized with the stored means and stds (the
    ones the regression was fitted on), so scores are reproducible from the
    artifact alone.
    """

    feature_names: tuple[str, ...]
    weights: np.ndarray  # normalized coefficients, max |w| == 1
    means: np.ndarray  # raw-unit feature means used for z-scoring
    stds: np.ndarray
    alpha: float = DEFAULT_ALPHA
    normalizer: float = field(default=1.0)  # the |beta| everything was divided by

    def __post_init__(self):
        for name in ("weights", "means", "stds"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=float)
            )
        n = len(self.feature_names)
        if not (len(self.weights) == len(self.means) == len(self.stds) == n):
            raise ValidationError("weights, means, stds must match feature_names")
        if n == 0:
            raise ValidationError("scorer needs at least one feature")
        if (self.stds <= 0).any():
            raise ValidationError("z-score stds must be positive")

    # -- scoring -----------------------------------------------------------

    def zvec(self, features: Mapping[str, float] | FeatureVector) -> np.ndarray:
        if isinstance(features, FeatureVector):
            features = features.as_dict()
        raw = np.empty(len(self.feature_names))
        for i, name in enumerate(self.feature_names):
            if name not in features:
                raise MissingFeature(f"feature {name!r} missing from input")
            raw[i] = float(features[name])
        if not np.isfinite(raw).all():
            raise ValidationError("non-finite feature value")
        return (raw - self.means) / self.stds

    def jam(self, features: Mapping[str, float] | FeatureVector) -> float:
        return float(self.weights @ self.zvec(features))

    def env(self, features: Mapping[str, float] | FeatureVector) -> float:
        return self.alpha - self.jam(features)

    def score(self, features: Mapping[str, float] | FeatureVector) -> tuple[float, float]:
        """(environment score, jam score); the pair sums to alpha exactly."""
        j = self.jam(features)
        return self.alpha - j, j

    def jam_from_z(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        if z.shape != self.weights.shape:
            raise ValidationError("z vector length must match the weights")
        return float(self.weights @ z)

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "feature_names": list(self.feature_names),
            "weights": [float(v) for v in self.weights],
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
            "normalizer": float(self.normalizer),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScoringFunction":
        return cls(
            feature_names=tuple(doc["feature_names"]),
            weights=np.asarray(doc["weights"], dtype=float),
            means=np.asarray(doc["means"], dtype=float),
            stds=np.asarray(doc["stds"], dtype=float),
            alpha=float(doc["alpha"]),
            normalizer=float(doc.get("normalizer", 1.0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ScoringFunction":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_scoring(
    fit: OlsFit,
    subset: tuple[str, ...],
    means: Mapping[str, float],
    stds: Mapping[str, float],
    alpha: float = DEFAULT_ALPHA,
) -> ScoringFunction:
    """Scorer from a fitted regression and its significant-feature subset.

    Coefficients are divided by the largest absolute coefficient in the
    subset, so the dominant feature gets weight +-1 and the rest scale
    relative to it. Means and stds are the raw-unit statistics the z-scored
    design was built with.
    """
    index = {name: i for i, name in enumerate(fit.feature_names)}
    missing = [name for name in subset if name not in index]
    if missing:
        raise ValidationError(f"subset names not in the fit: {', '.join(missing)}")
    if not subset:
        raise ValidationError("subset is empty")
    betas = np.array([fit.coef[index[name]] for name in subset])
    normalizer = float(np.abs(betas).max())
    if normalizer == 0.0:
        raise ValidationError("all subset coefficients are zero")
    return ScoringFunction(
        feature_names=tuple(subset),
        weights=betas / normalizer,
        means=np.array([float(means[name]) for name in subset]),
        stds=np.array([float(stds[name]) for name in subset]),
        alpha=alpha,
        normalizer=normalizer,
    )


def validate_scores(
    scoring: ScoringFunction,
    feature_rows: list[Mapping[str, float]],
    observed: np.ndarray,
) -> dict:
    """Squared correlation between jam scores and observed frequencies.

    Raises DegenerateVariance when either side is constant, since the
    correlation is undefined there.
    """
    observed = np.asarray(observed, dtype=float)
    if len(feature_rows) != len(observed):
        raise ValidationError("one observed frequency per feature row required")
    if len(observed) < 2:
        raise ValidationError("need at least two rows to correlate")
    jams = np.array([scoring.jam(row) for row in feature_rows])
    # ptp, not std: the mean of identical floats can land an ulp off, which
    # leaves a tiny nonzero std and a garbage correlation
    if np.ptp(jams) == 0.0:
        raise DegenerateVariance("jam scores are constant across rows")
    if np.ptp(observed) == 0.0:
        raise DegenerateVariance("observed frequencies are constant across rows")
    r = float(np.corrcoef(jams, observed)[0, 1])
    return {"r": r, "r_squared": r * r, "n": int(len(observed))}
