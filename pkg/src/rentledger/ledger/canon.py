"""Canonical JSON and ISO-8601 helpers shared across the ledger and tooling.

Everything committed to the ledger is plain JSON: party sets are sorted
string lists, dates are ``YYYY-MM-DD`` strings, timestamps are UTC with a
trailing ``Z``. Canonical encoding (sorted keys, no whitespace) makes
fingerprints and contract keys stable across dump/reload.
"""

from __future__ import annotations

import hashlib
import json
from datetime import date, datetime, timedelta, timezone

TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def digest(value) -> str:
    """Hex SHA-256 of the canonical encoding of a JSON value."""
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def to_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_ts(dt: datetime) -> str:
    return to_utc(dt).strftime(TS_FORMAT)


def parse_ts(value) -> datetime:
    """Parse an ISO timestamp (str or datetime) into an aware UTC datetime."""
    if isinstance(value, datetime):
        return to_utc(value)
    text = str(value)
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return to_utc(datetime.fromisoformat(text))


def ts_date(ts: str) -> str:
    """Calendar date (ISO) of an ISO timestamp string."""
    return ts[:10]


def parse_date(value) -> date:
    if isinstance(value, date) and not isinstance(value, datetime):
        return value
    return date.fromisoformat(str(value))


def format_date(value) -> str:
    return parse_date(value).isoformat()


def is_iso_date(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        date.fromisoformat(value)
    except ValueError:
        return False
    return True


def day_offset(start: str, end: str) -> int:
    """Whole days from ISO date `start` to ISO date `end` (may be negative)."""
    return (parse_date(end) - parse_date(start)).days


def add_days(day: str, n: int) -> str:
    return (parse_date(day) + timedelta(days=n)).isoformat()


def add_months(day: str, n: int) -> str:
    """Shift an ISO date by n months, clamping the day-of-month if needed."""
    d = parse_date(day)
    month0 = d.month - 1 + n
    year = d.year + month0 // 12
    month = month0 % 12 + 1
    last = [31, 29 if _leap(year) else 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31][month - 1]
    return date(year, month, min(d.day, last)).isoformat()


def _leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
