"""Qualification criteria, home-zone inference and demographic segmentation."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .metrics import QualityMetrics
from .stats import mann_whitney_u
from .traj import Ping, local_seconds_of_day

log = logging.getLogger(__name__)

NIGHT_START_H = 22
NIGHT_END_H = 7
DEFAULT_CELL_DEG = 0.001
RACES = ("White", "Black", "Asian", "Hispanic")


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class Criterion:
    min_temporal_occupancy: int
    max_gap_min: float
    min_records: int
    label: str = "custom"

    def __post_init__(self):
        if min(self.min_temporal_occupancy, self.max_gap_min, self.min_records) < 0:
            raise ValueError("criterion thresholds must be non-negative")
        if self.min_temporal_occupancy > 48:
            raise ValueError("min_temporal_occupancy cannot exceed 48")


CRITERION_1 = Criterion(40, 40, 300, "C1_strict")
CRITERION_2 = Criterion(20, 120, 100, "C2_medium")
CRITERION_3 = Criterion(10, 480, 20, "C3_lenient")
DEFAULT_CRITERIA = (CRITERION_1, CRITERION_2, CRITERION_3)


def evaluate_criterion(m: QualityMetrics, c: Criterion) -> bool:
    return (
        m.temporal_occupancy >= c.min_temporal_occupancy
        and m.max_record_gap_min <= c.max_gap_min
        and m.n_observations >= c.min_records
    )


def qualification_table(metrics: Iterable[QualityMetrics], criteria=DEFAULT_CRITERIA) -> np.ndarray:
    """Boolean array of shape ``(n_days, n_criteria)``."""
    rows = [[evaluate_criterion(m, c) for c in criteria] for m in metrics]
    return np.array(rows, dtype=bool).reshape(len(rows), len(criteria))


def qualified_rates(passed: np.ndarray) -> np.ndarray:
    """Percentage of days passing each criterion (column); 0 for no days."""
    passed = np.asarray(passed, dtype=bool)
    if passed.ndim == 1:
        passed = passed[:, None]
    n = passed.shape[0]
    if n == 0:
        return np.zeros(passed.shape[1])
    return 100.0 * passed.sum(axis=0) / n


# ---------------------------------------------------------------------------
# zones and home inference

@dataclass(frozen=True)
class ZoneProfile:
    zone_id: str
    population: int
    median_income: Optional[float] = None
    pct_bachelor_plus: Optional[float] = None
    race_shares: Optional[Mapping[str, float]] = None

    def __post_init__(self):
        if self.population < 0:
            raise ValueError("population must be non-negative")
        if self.race_shares is not None and sum(self.race_shares.values()) > 100.5:
            raise ValueError(f"race shares of {self.zone_id} sum above 100")


def cell_of(lat: float, lon: float, cell_deg: float = DEFAULT_CELL_DEG) -> tuple[int, int]:
    # the epsilon keeps values like 42.36 / 0.001 from landing one cell low
    return (math.floor(lat / cell_deg + 1e-9), math.floor(lon / cell_deg + 1e-9))


def is_night(timestamp: int, tz_offset_minutes: int = 0) -> bool:
    hour = local_seconds_of_day(timestamp, tz_offset_minutes) // 3600
    return hour >= NIGHT_START_H or hour < NIGHT_END_H


def infer_home_zone(
    user_pings: Iterable[Ping],
    cell_deg: float,
    zone_lookup: Mapping[tuple[int, int], str],
    tz_offset_minutes: int = 0,
) -> Optional[str]:
    """Zone of the grid cell holding most of a user's nighttime pings.

    Nighttime is local 22:00 to 07:00. Ties between equally frequent cells
    go to the smallest ``(lat_idx, lon_idx)`` key.
    """
    if not cell_deg > 0:
        raise ValueError("cell_deg must be positive")
    counts = Counter(
        cell_of(p.lat, p.lon, cell_deg) for p in user_pings if is_night(p.timestamp, tz_offset_minutes)
    )
    if not counts:
        return None
    best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    return zone_lookup.get(best)


def infer_home_zones(pings_by_user: Mapping[str, Sequence[Ping]], cell_deg, zone_lookup, tz_offset_minutes=0):
    homes = {}
    for user in sorted(pings_by_user):
        zone = infer_home_zone(pings_by_user[user], cell_deg, zone_lookup, tz_offset_minutes)
        if zone is not None:
            homes[user] = zone
    return homes


def quintile_segments(zones: Sequence[ZoneProfile], attribute: str, prefix: str = "Q") -> dict[str, str]:
    """Label zones ``Q1`` (lowest) to ``Q5`` by an attribute.

    Zones lacking the attribute are skipped. Groups are contiguous in
    sorted order and differ in size by at most one, the first groups
    taking the remainder.
    """
    if attribute not in ("median_income", "pct_bachelor_plus"):
        raise ValueError(f"unsupported attribute {attribute!r}")
    eligible = [z for z in zones if getattr(z, attribute) is not None]
    if len(eligible) < 5:
        raise InsufficientDataError(f"need at least 5 zones with {attribute}, got {len(eligible)}")
    eligible.sort(key=lambda z: (getattr(z, attribute), z.zone_id))
    base, extra = divmod(len(eligible), 5)
    labels = {}
    pos = 0
    for q in range(5):
        size = base + (1 if q < extra else 0)
        for z in eligible[pos:pos + size]:
            labels[z.zone_id] = f"{prefix}{q + 1}"
        pos += size
    return labels


def majority_race_segments(zones: Sequence[ZoneProfile]) -> tuple[dict[str, str], list[str]]:
    """Majority race label per zone, plus the ids of zones without race data.

    A zone is labelled with a race whose share is strictly above 50 %,
    otherwise ``Mixed``.
    """
    labels, excluded = {}, []
    for z in zones:
        if not z.race_shares:
            excluded.append(z.zone_id)
            continue
        label = "Mixed"
        for race in RACES:
            if z.race_shares.get(race, 0.0) > 50.0:
                label = race
                break
        labels[z.zone_id] = label
    if excluded:
        log.warning("%d zones without race data excluded", len(excluded))
    return labels, excluded


# ---------------------------------------------------------------------------
# group summaries

@dataclass
class SegmentSummary:
    segment_label: str
    n_zones: int
    total_population: int
    sampling_rate_pct: float
    qualified_rate_pct: dict[str, float]
    significance_vs_base: dict[str, tuple[float, float]] = field(default_factory=dict)
    n_users: int = 0
    n_days: int = 0
    is_empty: bool = False


def _user_days(day_metrics: Mapping[tuple[str, object], QualityMetrics]):
    by_user: dict[str, list[QualityMetrics]] = {}
    for (user, _day), m in sorted(day_metrics.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        by_user.setdefault(user, []).append(m)
    return by_user


def group_summary(
    segment: Iterable[str],
    users: Mapping[str, str],
    day_metrics: Mapping[tuple[str, object], QualityMetrics],
    profiles: Mapping[str, ZoneProfile],
    criteria: Sequence[Criterion] = DEFAULT_CRITERIA,
    label: str = "",
) -> SegmentSummary:
    """Sampling rate and qualified rates for the residents of a set of zones.

    Sampling rate is resident users over total zone population. Qualified
    rate is the share of those users' days passing each criterion; with no
    days it is reported as 0 and ``is_empty`` is set.
    """
    zones = set(segment)
    if not zones:
        raise ValueError("segment must contain at least one zone")
    population = sum(profiles[z].population for z in zones)
    if population <= 0:
        raise ZeroDivisionError(f"segment {label!r} has zero population")
    residents = {u for u, z in users.items() if z in zones}
    by_user = _user_days(day_metrics)
    metrics = [m for u in sorted(residents) for m in by_user.get(u, [])]
    table = qualification_table(metrics, criteria)
    rates = qualified_rates(table)
    return SegmentSummary(
        segment_label=label,
        n_zones=len(zones),
        total_population=population,
        sampling_rate_pct=100.0 * len(residents) / population,
        qualified_rate_pct={c.label: float(r) for c, r in zip(criteria, rates)},
        n_users=len(residents),
        n_days=len(metrics),
        is_empty=len(metrics) == 0,
    )


def per_zone_rates(
    zones: Iterable[str],
    users: Mapping[str, str],
    day_metrics: Mapping[tuple[str, object], QualityMetrics],
    profiles: Mapping[str, ZoneProfile],
    criteria: Sequence[Criterion] = DEFAULT_CRITERIA,
) -> dict[str, dict[str, float]]:
    """Per-zone sampling and qualified rates, the unit of the group tests.

    Zones with no observed days contribute no qualified-rate value.
    """
    by_user = _user_days(day_metrics)
    residents: dict[str, list[str]] = {}
    for u, z in users.items():
        residents.setdefault(z, []).append(u)
    out = {}
    for z in sorted(set(zones)):
        pop = profiles[z].population
        members = residents.get(z, [])
        rates = {"sampling": 100.0 * len(members) / pop if pop > 0 else float("nan")}
        metrics = [m for u in members for m in by_user.get(u, [])]
        if metrics:
            for c, r in zip(criteria, qualified_rates(qualification_table(metrics, criteria))):
                rates[c.label] = float(r)
        out[z] = rates
    return out


def compare_groups(base, other):
    """Mann-Whitney U of per-zone values; returns ``(U_base, z, p_two_sided)``."""
    return tuple(mann_whitney_u(base, other))
