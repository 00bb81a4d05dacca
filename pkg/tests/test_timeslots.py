"""Calendar labeling rules, which everything in the study design hangs on:
which timestamps count as school-run, exam, plain-workday, or baseline."""

from datetime import date, datetime, time

import pytest

from schooljam.errors import OutsideStudyWindow
from schooljam.gologit import commute_day_arms
from schooljam.ingest.timeslots import (
    CalendarConfig,
    default_calendar,
    label_timeslot,
)


@pytest.fixture(scope="module")
def cal():
    return default_calendar()


def test_default_week_shape(cal):
    days = cal.study_days()
    assert days[0] == date(2023, 6, 5)
    assert days[-1] == date(2023, 6, 11)
    assert len(days) == 7
    # 9 observed clock slots over 7 days
    slots = cal.slot_datetimes()
    assert len(slots) == 63
    assert len({s.time() for s in slots}) == 9


def test_school_run_labels(cal):
    # Monday 7:30 is a school-run slot on a workday
    slot = label_timeslot(datetime(2023, 6, 5, 7, 30), cal)
    assert (slot.work, slot.school, slot.exam) == (1, 1, 0)
    # Monday 12:30 is a plain workday slot
    slot = label_timeslot(datetime(2023, 6, 5, 12, 30), cal)
    assert (slot.work, slot.school, slot.exam) == (1, 0, 0)
    # Wednesday 9:30 falls in an exam window
    slot = label_timeslot(datetime(2023, 6, 7, 9, 30), cal)
    assert (slot.work, slot.school, slot.exam) == (1, 0, 1)
    # Sunday is baseline everywhere
    slot = label_timeslot(datetime(2023, 6, 11, 7, 30), cal)
    assert (slot.work, slot.school, slot.exam) == (0, 0, 0)


def test_school_dummy_only_on_school_run_days(cal):
    # Wednesday 7:30: same clock time, but not a school-run day
    slot = label_timeslot(datetime(2023, 6, 7, 7, 30), cal)
    assert slot.school == 0 and slot.work == 1


def test_outside_study_window(cal):
    with pytest.raises(OutsideStudyWindow):
        label_timeslot(datetime(2023, 7, 1, 7, 30), cal)


def test_commute_day_arms_exclusions(cal):
    school_days, no_school, baseline = commute_day_arms(cal)
    assert school_days == {date(2023, 6, 5), date(2023, 6, 6)}
    # Wednesday and Friday have morning exam sittings, so only Thursday
    # survives as a clean no-school workday
    assert no_school == {date(2023, 6, 8)}
    # Saturday hosts exams and is excluded from the weekend baseline
    assert baseline == {date(2023, 6, 11)}


def test_calendar_round_trip(cal):
    doc = cal.to_dict()
    back = CalendarConfig.from_dict(doc)
    assert back.to_dict() == doc
    assert back.study_days() == cal.study_days()
    assert back.slot_datetimes() == cal.slot_datetimes()
    assert back.extra_exam_days == cal.extra_exam_days


def test_extra_exam_days_default(cal):
    assert date(2023, 6, 10) in cal.extra_exam_days
    # extra exam days are not regular exam-window days
    assert date(2023, 6, 10) not in cal.exam_days()


def test_morning_commute_slots(cal):
    assert cal.is_morning_commute(datetime(2023, 6, 5, 7, 30))
    assert cal.is_morning_commute(datetime(2023, 6, 5, 8, 30))
    assert not cal.is_morning_commute(datetime(2023, 6, 5, 16, 30))


def test_exam_window_edges(cal):
    # window bounds are inclusive on both ends; no observed slot sits on
    # an exact boundary in the default grid, so this only pins semantics
    wed = [w for w in cal.exam_windows if w.day == date(2023, 6, 7)]
    assert wed, "default calendar should have Wednesday windows"
    w = min(wed, key=lambda w: w.start)
    assert w.contains(datetime.combine(w.day, w.start))
    assert w.contains(datetime.combine(w.day, w.end))
    assert not w.contains(datetime.combine(w.day, time(23, 59)))
