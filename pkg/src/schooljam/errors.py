"""Exception and warning types shared across the toolkit."""


class SchoolJamError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SchoolJamError):
    """A domain object violates one of its structural invariants."""


# ---------------------------------------------------------------------------
# feature vectors

class MissingFeature(SchoolJamError):
    """A required feature column is absent."""


class UnknownFeature(SchoolJamError):
    """A feature name outside the 25-column vocabulary was supplied."""


class OutOfRange(SchoolJamError):
    """A feature value violates its domain (dummy not in {0,1}, share outside [0,1], non-finite)."""


# ---------------------------------------------------------------------------
# ingest

class ParseError(SchoolJamError):
    """An input file is structurally invalid."""


class UnknownCategory(ParseError):
    """A road category outside {ordinary, main, express}."""


class OutsideStudyWindow(SchoolJamError):
    """A timestamp falls outside the configured study week."""


class NoObservations(SchoolJamError):
    """No congestion observation matches the requested filter."""


class EmptyGroup(SchoolJamError):
    """A requested (category, has_school) group contains no roads."""


class MissingLayer(SchoolJamError):
    """A feature layer has no record for the requested school."""


class ConstantColumn(SchoolJamError):
    """A column has zero variance and cannot be Z-scored."""


class EmptyNeighborhoodWarning(UserWarning):
    """A school has no road within its buffer radius."""


class DisconnectedNeighborhoodWarning(UserWarning):
    """Betweenness was computed on reachable pairs only."""


# ---------------------------------------------------------------------------
# scenescape

class KTooLarge(SchoolJamError):
    """More clusters requested than distinct vectors available."""


class InsufficientVectors(SchoolJamError):
    """A road category has fewer distinct scene vectors than its cluster count."""


class NoSampledPoints(SchoolJamError):
    """A neighborhood contains no sampled street-view point."""


# ---------------------------------------------------------------------------
# ordinal congestion model

class IndexOutOfRange(SchoolJamError):
    """A cumulative-split index outside 1..M-1."""


class NegativeProbability(SchoolJamError):
    """A category probability is negative beyond tolerance (crossing splits)."""


class NonFiniteLikelihood(SchoolJamError):
    """A data point has probability <= 0 at the current parameters."""


class SeparationDetected(SchoolJamError):
    """Coefficients diverged during fitting (quasi-complete separation)."""


class EmptyCategory(SchoolJamError):
    """Some outcome level never occurs in the training data."""


class NotConverged(SchoolJamError):
    """The optimizer stopped before reaching the gradient tolerance."""


class UnconvergedFit(SchoolJamError):
    """Marginal effects requested from an unconverged fit."""


class SingularCovariance(SchoolJamError):
    """The observed information matrix could not be inverted."""


# ---------------------------------------------------------------------------
# linear model

class RankDeficient(SchoolJamError):
    """The design matrix is rank deficient.

    Carries the offending column names in .columns when identifiable.
    """

    def __init__(self, message: str, columns: tuple = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class PerfectCollinearity(SchoolJamError):
    """A regressor is an exact linear combination of the others."""


class NoSignificantFeatures(SchoolJamError):
    """No coefficient clears the significance threshold."""


# ---------------------------------------------------------------------------
# Shapley attribution

class ModelNotLinear(SchoolJamError):
    """The closed-form linear path was handed a non-linear model."""


class TooManyFeatures(SchoolJamError):
    """Feature count exceeds the enumeration (or sampling) guard."""


class NonFiniteModelOutput(SchoolJamError):
    """The model returned NaN or infinity on a coalition composite."""


class EmptyInput(SchoolJamError):
    """An aggregate was requested over zero explanations."""


# ---------------------------------------------------------------------------
# scoring

class DegenerateVariance(SchoolJamError):
    """A validation series has zero variance."""


# ---------------------------------------------------------------------------
# synthetic generator

class SpecInfeasible(SchoolJamError):
    """A synthetic-city specification cannot be realized."""


class InvalidParams(SchoolJamError):
    """Planted parameters produce an invalid probability distribution."""


# ---------------------------------------------------------------------------
# pipeline / CLI

class MissingArtifact(SchoolJamError):
    """A pipeline stage requires an artifact that has not been produced."""


class ArtifactMismatch(SchoolJamError):
    """Loaded artifacts come from different pipeline runs."""
