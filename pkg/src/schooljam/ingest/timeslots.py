"""Study calendar configuration and timestamp -> dummy labeling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, time
from importlib import resources
from pathlib import Path

from ..domain import TimeSlot
from ..errors import OutsideStudyWindow, ValidationError


def _parse_time(s: str) -> time:
    h, m = s.split(":")
    return time(int(h), int(m))


def _parse_date(s: str) -> date:
    return date.fromisoformat(s)


@dataclass(frozen=True)
class ExamWindow:
    day: date
    start: time
    end: time

    def contains(self, ts: datetime) -> bool:
        return ts.date() == self.day and self.start <= ts.time() <= self.end


@dataclass(frozen=True)
class CalendarConfig:
    """One study week: which days and hours drive the three DID dummies.

    All hour ranges are inclusive on both ends. Slots on the observed grid
    are the timestamps the congestion map was polled at; labeling works for
    any in-week timestamp, on-grid or not.
    """

    study_start: date
    study_end: date
    weekend_days: frozenset[date]
    school_run_days: frozenset[date]
    school_hours_am: tuple[time, time]
    school_hours_pm: tuple[time, time]
    commute_hours_am: tuple[time, time]
    exam_windows: tuple[ExamWindow, ...]
    observation_windows: tuple[tuple[time, time], ...]
    observed_slots: tuple[time, ...]
    # days that host exam sittings without contributing labeled windows
    # (e.g. a weekend exam day); they are kept out of clean baselines
    extra_exam_days: frozenset[date] = frozenset()

    def __post_init__(self):
        if self.study_end < self.study_start:
            raise ValidationError("study_end before study_start")
        if self.school_run_days & self.weekend_days:
            raise ValidationError("school-run days must be workdays")
        for w in self.exam_windows:
            if w.day in self.school_run_days:
                # would let exam=1 and school=1 collide on the same slot
                if self._in_range(w.start, self.school_hours_am) or self._in_range(
                    w.start, self.school_hours_pm
                ):
                    raise ValidationError("exam window overlaps a school-run day")
        for slot in self.observed_slots:
            if not any(lo <= slot <= hi for lo, hi in self.observation_windows):
                raise ValidationError(
                    f"observed slot {slot} outside the study windows"
                )

    @staticmethod
    def _in_range(t: time, rng: tuple[time, time]) -> bool:
        return rng[0] <= t <= rng[1]

    # -- construction ------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "CalendarConfig":
        return cls(
            study_start=_parse_date(doc["study_start"]),
            study_end=_parse_date(doc["study_end"]),
            weekend_days=frozenset(_parse_date(d) for d in doc["weekend_days"]),
            school_run_days=frozenset(
                _parse_date(d) for d in doc["school_run_days"]
            ),
            school_hours_am=tuple(_parse_time(t) for t in doc["school_hours_am"]),
            school_hours_pm=tuple(_parse_time(t) for t in doc["school_hours_pm"]),
            commute_hours_am=tuple(
                _parse_time(t) for t in doc.get("commute_hours_am", doc["school_hours_am"])
            ),
            exam_windows=tuple(
                ExamWindow(_parse_date(w["date"]), _parse_time(w["start"]), _parse_time(w["end"]))
                for w in doc["exam_windows"]
            ),
            observation_windows=tuple(
                (_parse_time(lo), _parse_time(hi))
                for lo, hi in doc["observation_windows"]
            ),
            observed_slots=tuple(_parse_time(t) for t in doc["observed_slots"]),
            extra_exam_days=frozenset(
                _parse_date(d) for d in doc.get("extra_exam_days", [])
            ),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "CalendarConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        fmt_t = lambda t: t.strftime("%H:%M")  # noqa: E731
        return {
            "study_start": self.study_start.isoformat(),
            "study_end": self.study_end.isoformat(),
            "weekend_days": sorted(d.isoformat() for d in self.weekend_days),
            "school_run_days": sorted(d.isoformat() for d in self.school_run_days),
            "school_hours_am": [fmt_t(t) for t in self.school_hours_am],
            "school_hours_pm": [fmt_t(t) for t in self.school_hours_pm],
            "commute_hours_am": [fmt_t(t) for t in self.commute_hours_am],
            "exam_windows": [
                {"date": w.day.isoformat(), "start": fmt_t(w.start), "end": fmt_t(w.end)}
                for w in self.exam_windows
            ],
            "observation_windows": [
                [fmt_t(lo), fmt_t(hi)] for lo, hi in self.observation_windows
            ],
            "observed_slots": [fmt_t(t) for t in self.observed_slots],
            "extra_exam_days": sorted(d.isoformat() for d in self.extra_exam_days),
        }

    # -- queries -----------------------------------------------------------

    def study_days(self) -> list[date]:
        out = []
        d = self.study_start
        while d <= self.study_end:
            out.append(d)
            d = d.fromordinal(d.toordinal() + 1)
        return out

    def slot_datetimes(self) -> list[datetime]:
        """Every observed (day, slot) timestamp of the study week."""
        return [
            datetime.combine(d, t) for d in self.study_days() for t in self.observed_slots
        ]

    def is_school_slot(self, ts: datetime) -> bool:
        if ts.date() not in self.school_run_days:
            return False
        t = ts.time()
        return self._in_range(t, self.school_hours_am) or self._in_range(
            t, self.school_hours_pm
        )

    def is_morning_commute(self, ts: datetime) -> bool:
        return self._in_range(ts.time(), self.commute_hours_am)

    def exam_days(self) -> frozenset[date]:
        return frozenset(w.day for w in self.exam_windows)


def default_calendar() -> CalendarConfig:
    text = (
        resources.files("schooljam.data").joinpath("calendar_default.json").read_text()
    )
    return CalendarConfig.from_dict(json.loads(text))


def label_timeslot(ts: datetime, config: CalendarConfig) -> TimeSlot:
    """Attach the work / school / exam dummies to a timestamp.

    Raises OutsideStudyWindow for dates outside the configured week.
    """
    d = ts.date()
    if not (config.study_start <= d <= config.study_end):
        raise OutsideStudyWindow(f"{ts.isoformat()} outside the study week")
    work = 0 if d in config.weekend_days else 1
    school = 1 if config.is_school_slot(ts) else 0
    exam = 1 if any(w.contains(ts) for w in config.exam_windows) else 0
    if school == 1:
        exam = 0  # config validation prevents overlap; belt and braces
    return TimeSlot(timestamp=ts, work=work, school=school, exam=exam)
