"""Core vocabulary types: roads, schools, time slots, observations, features.

All geometry lives in a planar projected CRS measured in meters. Angles are
degrees counterclockwise from due east around a configurable city center.
Instances validate on construction and are immutable afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum, IntEnum
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    MissingFeature,
    OutOfRange,
    UnknownFeature,
    ValidationError,
)

Point = tuple[float, float]

#: relative tolerance for redundant derived quantities (lengths, angles)
CONSISTENCY_RTOL = 1e-6

#: congestion levels at or above this count as "congested" for frequencies
CONGESTION_CUTOFF = 3

#: buffer radius used throughout the study, meters
DEFAULT_RADIUS_M = 500.0


class CongestionLevel(IntEnum):
    """Four-level ordinal congestion state. Round-trips through int()."""

    SMOOTH = 1
    SLOW = 2
    CONGESTED = 3
    SEVERELY_CONGESTED = 4


class RoadCategory(str, Enum):
    ORDINARY = "ordinary"
    MAIN = "main"
    EXPRESS = "express"


def polyline_length(points: Iterable[Point]) -> float:
    pts = list(points)
    return float(
        sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))
    )


@dataclass(frozen=True)
class RoadSegment:
    """One digitized road segment with a vertex chain in meters.

    ``length`` may be omitted (it is derived from the polyline) or supplied,
    in which case it must agree with the polyline within 1e-6 relative.
    """

    id: str
    category: RoadCategory
    polyline: tuple[Point, ...]
    length: float = field(default=math.nan)

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise ValidationError(f"segment {self.id!r}: polyline needs >= 2 points")
        derived = polyline_length(self.polyline)
        if derived <= 0.0:
            raise ValidationError(f"segment {self.id!r}: zero-length polyline")
        if math.isnan(self.length):
            object.__setattr__(self, "length", derived)
        elif abs(self.length - derived) > CONSISTENCY_RTOL * max(1.0, derived):
            raise ValidationError(
                f"segment {self.id!r}: declared length {self.length} disagrees "
                f"with polyline length {derived}"
            )

    def endpoints(self) -> tuple[Point, Point]:
        return self.polyline[0], self.polyline[-1]


@dataclass(frozen=True)
class School:
    """A school location with its polar position relative to the city center.

    angle_deg is counterclockwise from due east in [0, 360); distance_km is
    the straight-line distance to the configured center.
    """

    id: str
    location: Point
    angle_deg: float
    distance_km: float

    @classmethod
    def from_location(cls, id: str, location: Point, center: Point) -> "School":
        dx = location[0] - center[0]
        dy = location[1] - center[1]
        angle = math.degrees(math.atan2(dy, dx)) % 360.0
        distance = math.hypot(dx, dy) / 1000.0
        return cls(id=id, location=location, angle_deg=angle, distance_km=distance)

    def __post_init__(self):
        if not (0.0 <= self.angle_deg < 360.0):
            raise ValidationError(
                f"school {self.id!r}: angle {self.angle_deg} outside [0, 360)"
            )
        if self.distance_km < 0.0:
            raise ValidationError(f"school {self.id!r}: negative distance")

    def check_against_center(self, center: Point) -> None:
        """Raise unless (angle_deg, distance_km) match the location/center pair."""
        ref = School.from_location(self.id, self.location, center)
        d_angle = abs(self.angle_deg - ref.angle_deg)
        d_angle = min(d_angle, 360.0 - d_angle)
        if d_angle > CONSISTENCY_RTOL * 360.0 and self.distance_km > 1e-12:
            raise ValidationError(
                f"school {self.id!r}: angle {self.angle_deg} inconsistent with "
                f"center (expected {ref.angle_deg})"
            )
        if abs(self.distance_km - ref.distance_km) > CONSISTENCY_RTOL * max(
            1.0, ref.distance_km
        ):
            raise ValidationError(
                f"school {self.id!r}: distance {self.distance_km} inconsistent "
                f"with center (expected {ref.distance_km})"
            )


@dataclass(frozen=True)
class TimeSlot:
    """An observation timestamp with its three DID dummies.

    Invariants: school runs only happen on workdays (school=1 => work=1) and
    exam slots never coincide with school-run slots (exam=1 => school=0).
    """

    timestamp: datetime
    work: int
    school: int
    exam: int

    def __post_init__(self):
        for name in ("work", "school", "exam"):
            v = getattr(self, name)
            if v not in (0, 1):
                raise ValidationError(f"{name} dummy must be 0 or 1, got {v!r}")
        if self.school == 1 and self.work != 1:
            raise ValidationError("school=1 requires work=1")
        if self.exam == 1 and self.school != 0:
            raise ValidationError("exam=1 requires school=0")


@dataclass(frozen=True)
class CongestionObservation:
    road_id: str
    slot: TimeSlot
    level: CongestionLevel

    def __post_init__(self):
        if not isinstance(self.level, CongestionLevel):
            object.__setattr__(self, "level", CongestionLevel(self.level))


@dataclass(frozen=True)
class Neighborhood:
    """The set of road segments within radius_m of a school."""

    school_id: str
    road_ids: frozenset[str]
    radius_m: float = DEFAULT_RADIUS_M

    def __post_init__(self):
        if self.radius_m <= 0:
            raise ValidationError("radius_m must be positive")
        object.__setattr__(self, "road_ids", frozenset(self.road_ids))


# ---------------------------------------------------------------------------
# the 25-column built-environment feature vocabulary

PHYSICAL_FEATURES: tuple[str, ...] = (
    "school_mix",
    "angle",
    "distance",
    "population",
    "bus_stop",
    "subway",
    "parking_lot",
    "betweeness",
    "integration",
    "choice",
    "intersecton",
    "building_age",
    "building_height",
    "building_mix",
    "landuse_mix",
)

SCENE_FEATURES: tuple[str, ...] = (
    "UFB",
    "UPL",
    "BR",
    "HR",
    "FBH",
    "RH",
    "DBH",
    "SPH",
    "ECH",
    "BRH",
)

FEATURE_NAMES: tuple[str, ...] = PHYSICAL_FEATURES + SCENE_FEATURES

#: features coded 0/1 from the threshold rules (pre-normalization)
DUMMY_FEATURES: frozenset[str] = frozenset(
    {
        "school_mix",
        "population",
        "bus_stop",
        "subway",
        "parking_lot",
        "building_age",
        "building_height",
        "building_mix",
        "landuse_mix",
    }
)

_FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class FeatureVector:
    """Raw (pre-normalization) 25-entry feature vector for one school."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES):
            raise MissingFeature(
                f"expected {len(FEATURE_NAMES)} entries, got {len(self.values)}"
            )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "FeatureVector":
        for key in mapping:
            if key not in _FEATURE_INDEX:
                raise UnknownFeature(f"unknown feature {key!r}")
        missing = [n for n in FEATURE_NAMES if n not in mapping]
        if missing:
            raise MissingFeature(f"missing feature {missing[0]!r}")
        return cls(tuple(float(mapping[n]) for n in FEATURE_NAMES))

    def __getitem__(self, name: str) -> float:
        try:
            return self.values[_FEATURE_INDEX[name]]
        except KeyError:
            raise UnknownFeature(f"unknown feature {name!r}") from None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def validate_feature_vector(
    vector: FeatureVector | Mapping[str, float],
) -> FeatureVector:
    """Check the 25-column invariants and return the validated vector.

    Dummy-coded entries must be exactly 0 or 1 and scenescape shares must lie
    in [0, 1]; everything must be finite. Raises MissingFeature / OutOfRange.
    """
    v = (
        vector
        if isinstance(vector, FeatureVector)
        else FeatureVector.from_mapping(vector)
    )
    for name, value in zip(FEATURE_NAMES, v.values):
        if not math.isfinite(value):
            raise OutOfRange(f"{name}: non-finite value {value!r}")
        if name in DUMMY_FEATURES and value not in (0.0, 1.0):
            raise OutOfRange(f"{name}: dummy value {value!r} not in {{0, 1}}")
        if name in SCENE_FEATURES and not (0.0 <= value <= 1.0):
            raise OutOfRange(f"{name}: share {value!r} outside [0, 1]")
    return v
