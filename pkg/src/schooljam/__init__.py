"""School-run traffic congestion analytics toolkit.

Two linked models: an ordinal (generalized ordered logit) model of congestion
levels against school-run / work / exam time dummies, and a linear model of
congestion frequency against 25 built-environment features, explained through
exact Shapley attribution and condensed into a built-environment quality score.
A synthetic-city generator provides planted-parameter oracles for everything.
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
from .domain import (  # noqa: F401
    CongestionLevel,
    CongestionObservation,
    FeatureVector,
    FEATURE_NAMES,
    Neighborhood,
    RoadCategory,
    RoadSegment,
    School,
    TimeSlot,
    validate_feature_vector,
)
from .gologit import GologitData, GologitSpec, fit_gologit  # noqa: F401
from .ols import OlsFit, fit_ols  # noqa: F401
from .pipeline import PipelineConfig, run_pipeline, run_synthetic  # noqa: F401
from .scoring import ScoringFunction, build_scoring  # noqa: F401
from .shapx import shapley_exact, shapley_linear  # noqa: F401
from .synth import SynthSpec  # noqa: F401
