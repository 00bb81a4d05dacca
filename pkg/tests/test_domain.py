import math
from datetime import datetime

import pytest

from schooljam.domain import (
    DUMMY_FEATURES,
    FEATURE_NAMES,
    PHYSICAL_FEATURES,
    SCENE_FEATURES,
    CongestionLevel,
    FeatureVector,
    RoadCategory,
    RoadSegment,
    School,
    TimeSlot,
    validate_feature_vector,
)
from schooljam.errors import (
    MissingFeature,
    OutOfRange,
    UnknownFeature,
    ValidationError,
)

TS = datetime(2023, 6, 5, 7, 30)


def test_feature_name_layout():
    assert len(PHYSICAL_FEATURES) == 15
    assert len(SCENE_FEATURES) == 10
    assert FEATURE_NAMES == PHYSICAL_FEATURES + SCENE_FEATURES
    assert len(FEATURE_NAMES) == 25
    assert len(set(FEATURE_NAMES)) == 25
    assert SCENE_FEATURES[-1] == "BRH"
    assert set(DUMMY_FEATURES) <= set(PHYSICAL_FEATURES)


def test_congestion_levels_are_one_to_four():
    assert [lev.value for lev in CongestionLevel] == [1, 2, 3, 4]


def test_school_from_location_angle_and_distance():
    center = (0.0, 0.0)
    s = School.from_location("S1", (1000.0, 1000.0), center)
    assert s.distance_km == pytest.approx(math.hypot(1.0, 1.0))
    assert s.angle_deg == pytest.approx(45.0)
    assert School.from_location("S2", (500.0, 0.0), center).angle_deg == 0.0
    assert School.from_location("S3", (0.0, 500.0), center).angle_deg == 90.0
    assert School.from_location("S4", (-500.0, 0.0), center).angle_deg == 180.0
    assert School.from_location("S5", (0.0, -2.0), center).angle_deg == 270.0


def test_road_segment_derives_length():
    seg = RoadSegment(
        id="r", category=RoadCategory.MAIN, polyline=((0.0, 0.0), (300.0, 400.0))
    )
    assert seg.length == pytest.approx(500.0)


def test_road_segment_rejects_contradictory_length():
    with pytest.raises(ValidationError):
        RoadSegment(
            id="r",
            category=RoadCategory.MAIN,
            polyline=((0.0, 0.0), (300.0, 400.0)),
            length=410.0,
        )


def test_timeslot_implications():
    # a school-run slot is always a workday slot
    with pytest.raises(ValidationError):
        TimeSlot(timestamp=TS, work=0, school=1, exam=0)
    # exam windows suppress the school dummy
    with pytest.raises(ValidationError):
        TimeSlot(timestamp=TS, work=1, school=1, exam=1)
    ok = TimeSlot(timestamp=TS, work=1, school=0, exam=1)
    assert (ok.work, ok.school, ok.exam) == (1, 0, 1)


def _full(**overrides):
    values = dict.fromkeys(FEATURE_NAMES, 0.0)
    values.update(overrides)
    return values


def test_validate_feature_vector_accepts_zeros():
    validate_feature_vector(_full())


def test_validate_feature_vector_rejects_bad_dummy():
    with pytest.raises(OutOfRange):
        validate_feature_vector(_full(subway=0.5))


def test_validate_feature_vector_rejects_share_outside_unit_interval():
    with pytest.raises(OutOfRange):
        validate_feature_vector(_full(UFB=1.2))


def test_validate_feature_vector_rejects_non_finite():
    with pytest.raises(OutOfRange):
        validate_feature_vector(_full(distance=float("nan")))


def test_feature_vector_mapping_errors():
    with pytest.raises(MissingFeature):
        FeatureVector.from_mapping({n: 0.0 for n in FEATURE_NAMES[:-1]})
    with pytest.raises(UnknownFeature):
        FeatureVector.from_mapping({**_full(), "mystery": 1.0})
    vec = FeatureVector.from_mapping(_full(angle=33.0))
    assert vec["angle"] == 33.0
    with pytest.raises(UnknownFeature):
        vec["mystery"]
