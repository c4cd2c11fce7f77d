"""Ping data model, record parsing and user-day partitioning.

A *user-day* is every ping of one user that falls on one local calendar
date. Local time is UTC shifted by a single fixed offset for the whole
corpus; there is no daylight-saving handling.
"""

from __future__ import annotations

import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

SECONDS_PER_DAY = 86400

DEFAULT_COLUMNS = ("user_id", "timestamp", "lat", "lon", "accuracy_m")


class RecordError(ValueError):
    """A single input record could not be turned into a valid ping."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


class ValidationError(ValueError):
    """A :class:`UserDay` violates one of its invariants."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


@dataclass(frozen=True)
class Ping:
    user_id: str
    timestamp: int
    lat: float
    lon: float
    accuracy_m: Optional[float] = None

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or math.isnan(self.lat):
            raise ValueError(f"lat out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0) or math.isnan(self.lon):
            raise ValueError(f"lon out of range: {self.lon}")
        if self.accuracy_m is not None and not self.accuracy_m >= 0:
            raise ValueError(f"accuracy_m must be non-negative: {self.accuracy_m}")


def local_date(timestamp: int, tz_offset_minutes: int = 0) -> dt.date:
    """Local calendar date of a UTC epoch timestamp."""
    local = timestamp + tz_offset_minutes * 60
    return dt.date(1970, 1, 1) + dt.timedelta(days=local // SECONDS_PER_DAY)


def local_seconds_of_day(timestamp: int, tz_offset_minutes: int = 0) -> int:
    return (timestamp + tz_offset_minutes * 60) % SECONDS_PER_DAY


def day_start_utc(day_id: dt.date, tz_offset_minutes: int = 0) -> int:
    """UTC epoch second at which local midnight of ``day_id`` occurs."""
    days = (day_id - dt.date(1970, 1, 1)).days
    return days * SECONDS_PER_DAY - tz_offset_minutes * 60


@dataclass(frozen=True)
class UserDay:
    user_id: str
    day_id: dt.date
    pings: tuple[Ping, ...] = ()
    tz_offset_minutes: int = 0

    @property
    def key(self) -> str:
        return f"{self.user_id}|{self.day_id.isoformat()}"

    @property
    def timestamps(self) -> list[int]:
        return [p.timestamp for p in self.pings]

    def __len__(self) -> int:
        return len(self.pings)

    def with_pings(self, pings: Iterable[Ping]) -> "UserDay":
        return UserDay(self.user_id, self.day_id, tuple(pings), self.tz_offset_minutes)


@dataclass(frozen=True)
class Corpus:
    user_days: tuple[UserDay, ...]
    tz_offset_minutes: int = 0
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for day in self.user_days:
            k = (day.user_id, day.day_id)
            if k in seen:
                raise ValueError(f"duplicate user-day {k}")
            seen.add(k)

    def __len__(self) -> int:
        return len(self.user_days)

    def __iter__(self):
        return iter(self.user_days)

    def pings_by_user(self) -> dict[str, list[Ping]]:
        out: dict[str, list[Ping]] = defaultdict(list)
        for day in self.user_days:
            out[day.user_id].extend(day.pings)
        return dict(out)


def _parse_timestamp(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        value = None
    if value is not None:
        if not value.is_integer():
            raise ValueError(f"timestamp is not whole seconds: {text!r}")
        return int(value)
    stamp = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return int(stamp.timestamp())


def parse_ping_record(
    line: str,
    schema: Mapping[str, int] | Sequence[str] = DEFAULT_COLUMNS,
    line_no: Optional[int] = None,
    delimiter: str = ",",
) -> Ping:
    """Parse one delimited text record into a validated :class:`Ping`.

    Parameters
    ----------
    line : str
        The raw record, e.g. ``"u1,1577836800,42.36,-71.06,25"``.
    schema : mapping or sequence
        Either a mapping from field name to column index, or the ordered
        column names of the record. ``accuracy_m`` may be absent.
    line_no : int, optional
        Carried on any :class:`RecordError` so callers can report it.

    Raises
    ------
    RecordError
        Too few fields, unparseable numbers or timestamps, or coordinates
        out of geographic bounds.
    """
    if not isinstance(schema, Mapping):
        schema = {name: i for i, name in enumerate(schema)}
    fields = line.rstrip("\r\n").split(delimiter)
    required = ("user_id", "timestamp", "lat", "lon")
    missing = [name for name in required if name not in schema]
    if missing:
        raise RecordError(f"schema lacks columns {missing}", line_no)
    if len(fields) < 4 or any(schema[name] >= len(fields) for name in required):
        raise RecordError(f"expected at least 4 fields, got {len(fields)}", line_no)

    user_id = fields[schema["user_id"]].strip()
    if not user_id:
        raise RecordError("empty user_id", line_no)
    try:
        timestamp = _parse_timestamp(fields[schema["timestamp"]])
    except ValueError as exc:
        raise RecordError(f"unparseable timestamp: {exc}", line_no) from None
    try:
        lat = float(fields[schema["lat"]])
        lon = float(fields[schema["lon"]])
    except ValueError:
        raise RecordError("malformed coordinates", line_no) from None

    accuracy = None
    acc_idx = schema.get("accuracy_m")
    if acc_idx is not None and acc_idx < len(fields) and fields[acc_idx].strip():
        try:
            accuracy = float(fields[acc_idx])
        except ValueError:
            raise RecordError("malformed accuracy", line_no) from None

    try:
        return Ping(user_id, timestamp, lat, lon, accuracy)
    except ValueError as exc:
        raise RecordError(str(exc), line_no) from None


def format_ping_record(ping: Ping, delimiter: str = ",") -> str:
    acc = "" if ping.accuracy_m is None else repr(float(ping.accuracy_m))
    return delimiter.join(
        [ping.user_id, str(ping.timestamp), repr(float(ping.lat)), repr(float(ping.lon)), acc]
    )


def partition_user_days(pings: Iterable[Ping], tz_offset_minutes: int = 0) -> list[UserDay]:
    """Group pings into user-days by local calendar date.

    Pings are sorted by timestamp inside each day. When one user has
    several pings with the same timestamp only the first one seen is
    kept. Output is sorted by ``(user_id, day_id)``.
    """
    first_seen: dict[tuple[str, int], Ping] = {}
    for ping in pings:
        first_seen.setdefault((ping.user_id, ping.timestamp), ping)

    groups: dict[tuple[str, dt.date], list[Ping]] = defaultdict(list)
    for (user, ts), ping in first_seen.items():
        groups[(user, local_date(ts, tz_offset_minutes))].append(ping)

    days = []
    for (user, day_id) in sorted(groups):
        members = sorted(groups[(user, day_id)], key=lambda p: p.timestamp)
        days.append(UserDay(user, day_id, tuple(members), tz_offset_minutes))
    return days


def validate_user_day(day: UserDay) -> UserDay:
    """Check ordering, uniqueness and same-day membership of a day's pings."""
    start = day_start_utc(day.day_id, day.tz_offset_minutes)
    end = start + SECONDS_PER_DAY
    prev = None
    for p in day.pings:
        if p.user_id != day.user_id:
            raise ValidationError("user", f"ping of {p.user_id!r} in day of {day.user_id!r}")
        if prev is not None:
            if p.timestamp == prev:
                raise ValidationError("duplicate", f"duplicate timestamp {p.timestamp}")
            if p.timestamp < prev:
                raise ValidationError("unsorted", f"timestamp {p.timestamp} after {prev}")
        if not (start <= p.timestamp < end):
            raise ValidationError("cross-day", f"timestamp {p.timestamp} outside {day.day_id}")
        prev = p.timestamp
    return day


def build_corpus(
    pings: Iterable[Ping], tz_offset_minutes: int = 0, provenance: Sequence[str] = ()
) -> Corpus:
    days = partition_user_days(pings, tz_offset_minutes)
    return Corpus(tuple(days), tz_offset_minutes, tuple(provenance))
