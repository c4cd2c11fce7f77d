"""Gap-aware stay point detection on a single user-day."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .traj import UserDay

EARTH_RADIUS_M = 6_371_000.0


def haversine_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between two ``(lat, lon)`` points."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class StayParams:
    roaming_radius_m: float = 100.0
    min_stay_min: float = 20.0
    gap_split_min: float = 30.0

    def __post_init__(self):
        for name in ("roaming_radius_m", "min_stay_min", "gap_split_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class StayPoint:
    centroid_lat: float
    centroid_lon: float
    start_ts: int
    end_ts: int
    n_pings: int

    @property
    def dwell_min(self) -> float:
        return (self.end_ts - self.start_ts) / 60.0


def detect_stays(day: UserDay, params: StayParams = StayParams()) -> list[StayPoint]:
    """Sequential anchor-based stay detection.

    Starting from an anchor ping, the candidate grows while each next ping
    lies within ``roaming_radius_m`` of the anchor and follows the previous
    member by at most ``gap_split_min``. When the candidate ends because the
    device moved away (or the day ended) and its first-to-last dwell
    reaches ``min_stay_min``, it becomes a stay. A candidate cut short by a
    silent gap longer than ``gap_split_min`` is discarded: the dwell is not
    recognised across missing data. Either way the scan resumes at the
    first ping after the candidate.
    """
    pings = day.pings
    n = len(pings)
    radius = params.roaming_radius_m
    max_gap_s = params.gap_split_min * 60.0
    min_dwell_s = params.min_stay_min * 60.0

    lats = [math.radians(p.lat) for p in pings]
    lons = [math.radians(p.lon) for p in pings]
    coslat = [math.cos(x) for x in lats]
    ts = [p.timestamp for p in pings]
    # haversine with radius test done on the squared half-chord to skip asin
    h_max = math.sin(radius / (2 * EARTH_RADIUS_M)) ** 2

    stays = []
    i = 0
    while i < n:
        lat_i, lon_i, cos_i = lats[i], lons[i], coslat[i]
        j = i + 1
        gap_cut = False
        while j < n:
            h = math.sin((lats[j] - lat_i) / 2) ** 2 + cos_i * coslat[j] * math.sin((lons[j] - lon_i) / 2) ** 2
            if h > h_max:
                break
            if ts[j] - ts[j - 1] > max_gap_s:
                gap_cut = True
                break
            j += 1
        last = j - 1
        if not gap_cut and ts[last] - ts[i] >= min_dwell_s:
            members = pings[i:j]
            stays.append(
                StayPoint(
                    centroid_lat=sum(p.lat for p in members) / len(members),
                    centroid_lon=sum(p.lon for p in members) / len(members),
                    start_ts=ts[i],
                    end_ts=ts[last],
                    n_pings=len(members),
                )
            )
        i = j
    return stays


def count_stays(day: UserDay, params: StayParams = StayParams()) -> int:
    return len(detect_stays(day, params))
