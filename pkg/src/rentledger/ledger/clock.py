"""Clock sources injected into the engine.

The engine only ever calls a zero-argument function returning a datetime,
so tests, the scenario runner, and the benchmark can drive time by hand.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from .canon import parse_date, parse_ts


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class ManualClock:
    """A settable clock. `set` accepts ISO timestamps, dates, or datetimes."""

    def __init__(self, start="2024-05-01T08:00:00Z"):
        self._now = self._coerce(start)

    @staticmethod
    def _coerce(when) -> datetime:
        if isinstance(when, datetime):
            return parse_ts(when)
        text = str(when)
        if len(text) == 10:  # bare date: pin mid-morning to stay clear of midnight
            d = parse_date(text)
            return datetime(d.year, d.month, d.day, 8, 0, 0, tzinfo=timezone.utc)
        return parse_ts(text)

    def __call__(self) -> datetime:
        return self._now

    def set(self, when) -> None:
        self._now = self._coerce(when)

    def tick(self, seconds: float = 1.0) -> None:
        self._now += timedelta(seconds=seconds)
