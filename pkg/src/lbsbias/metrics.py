"""Per-user-day data quality metrics.

Five metrics describe how well a device was observed over a day:
record count, temporal occupancy (number of 30-minute slots with at
least one ping), the largest gap between consecutive records, the share
of pings with accuracy better than 100 m, and the burstiness of the
inter-record intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .traj import UserDay, local_seconds_of_day

SLOT_MINUTES = 30
N_SLOTS = 48
NO_CONTINUITY_GAP_MIN = 1440.0
HIGH_ACCURACY_M = 100.0


class EmptyDayError(ValueError):
    pass


@dataclass(frozen=True)
class QualityMetrics:
    n_observations: int
    temporal_occupancy: int
    max_record_gap_min: float
    pct_high_accuracy: float
    burstiness: Optional[float]
    is_empty: bool = False

    def __post_init__(self):
        if not 0 <= self.temporal_occupancy <= N_SLOTS:
            raise ValueError(f"temporal_occupancy out of range: {self.temporal_occupancy}")
        if self.temporal_occupancy > self.n_observations:
            raise ValueError("temporal_occupancy exceeds n_observations")
        if not 0.0 <= self.pct_high_accuracy <= 100.0:
            raise ValueError(f"pct_high_accuracy out of range: {self.pct_high_accuracy}")
        if self.burstiness is not None and not -1.0 <= self.burstiness <= 1.0:
            raise ValueError(f"burstiness out of range: {self.burstiness}")


def n_observations(day: UserDay) -> int:
    return len(day.pings)


def temporal_occupancy(day: UserDay) -> int:
    slots = {
        local_seconds_of_day(p.timestamp, day.tz_offset_minutes) // (SLOT_MINUTES * 60)
        for p in day.pings
    }
    return len(slots)


def _intervals_min(day: UserDay) -> np.ndarray:
    ts = np.fromiter((p.timestamp for p in day.pings), dtype=np.int64, count=len(day.pings))
    return np.diff(ts) / 60.0


def max_record_gap(day: UserDay) -> float:
    """Largest gap between consecutive records, in minutes.

    Days with fewer than two pings have no gap to measure and get the
    full-day sentinel of 1440 minutes.
    """
    if len(day.pings) < 2:
        return NO_CONTINUITY_GAP_MIN
    return float(_intervals_min(day).max())


def pct_high_accuracy(day: UserDay) -> float:
    n = len(day.pings)
    if n == 0:
        raise EmptyDayError("percentage of high-accuracy pings is undefined for an empty day")
    good = sum(1 for p in day.pings if p.accuracy_m is not None and p.accuracy_m < HIGH_ACCURACY_M)
    return 100.0 * good / n


def burstiness_of_intervals(intervals) -> Optional[float]:
    """``(sigma - mu) / (sigma + mu)`` with population sigma.

    Returns None for fewer than two intervals or a zero mean.
    """
    x = np.asarray(intervals, dtype=float)
    if x.size < 2:
        return None
    mu = x.mean()
    if mu == 0:
        return None
    sigma = x.std()
    b = (sigma - mu) / (sigma + mu)
    return float(min(1.0, max(-1.0, b)))


def burstiness(day: UserDay) -> Optional[float]:
    if len(day.pings) < 3:
        return None
    return burstiness_of_intervals(_intervals_min(day))


def metrics_vector(day: UserDay) -> QualityMetrics:
    """All five metrics for one day.

    An empty day reports 0 % high-accuracy pings with ``is_empty`` set,
    rather than raising, so that corpus-level tables stay total.
    """
    n = len(day.pings)
    if n == 0:
        return QualityMetrics(0, 0, NO_CONTINUITY_GAP_MIN, 0.0, None, is_empty=True)
    return QualityMetrics(
        n_observations=n,
        temporal_occupancy=temporal_occupancy(day),
        max_record_gap_min=max_record_gap(day),
        pct_high_accuracy=pct_high_accuracy(day),
        burstiness=burstiness(day),
    )
