"""Synthetic user-days with known stay counts.

The generator is a correctness oracle rather than a mobility model. Each
day is a sequence of stays at well separated places joined by straight,
constant-speed trips, and pings are emitted at a jittered cadence with
bounded position noise. Under the default settings, stay detection with
default parameters recovers every scheduled stay.
"""

from __future__ import annotations

import bisect
import datetime as dt
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .seeding import derive_seed
from .segmentation import ZoneProfile, cell_of
from .staypoints import StayParams
from .traj import Corpus, Ping, UserDay, day_start_utc

METERS_PER_DEG_LAT = 2 * math.pi * 6_371_000.0 / 360.0
DEFAULT_CENTER = (42.36, -71.06)
DEFAULT_DAY = dt.date(2020, 1, 1)


class ConfigError(ValueError):
    pass


def offset_latlon(origin: tuple[float, float], east_m: float, north_m: float) -> tuple[float, float]:
    lat0, lon0 = origin
    return (
        lat0 + north_m / METERS_PER_DEG_LAT,
        lon0 + east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(lat0))),
    )


@dataclass(frozen=True)
class ScheduleConfig:
    stays_range: tuple[int, int] = (3, 10)
    min_dwell_min: float = 30.0
    hop_range_m: tuple[float, float] = (300.0, 2500.0)
    extent_m: float = 6000.0
    center: tuple[float, float] = DEFAULT_CENTER
    speed_mps: float = 1.4
    min_separation_m: float = 250.0
    return_home: bool = True
    min_stay_min: float = StayParams().min_stay_min

    def check(self):
        lo, hi = self.stays_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"invalid stays_range {self.stays_range}")
        if self.hop_range_m[0] <= self.min_separation_m or self.hop_range_m[1] < self.hop_range_m[0]:
            raise ConfigError("hop_range_m must lie above min_separation_m")
        min_travel = (hi - 1) * self.hop_range_m[0] / self.speed_mps / 60.0
        if hi * self.min_dwell_min + min_travel > 1440:
            raise ConfigError("minimum dwell and travel time exceed one day")


@dataclass(frozen=True)
class Episode:
    kind: str  # "stay" or "travel"
    start_min: float
    end_min: float
    origin: tuple[float, float]
    destination: tuple[float, float]

    @property
    def duration_min(self) -> float:
        return self.end_min - self.start_min


@dataclass(frozen=True)
class DaySchedule:
    user_id: str
    day_id: dt.date
    episodes: tuple[Episode, ...]
    min_stay_min: float = 20.0

    @property
    def stays(self) -> list[Episode]:
        return [e for e in self.episodes if e.kind == "stay"]

    @property
    def true_stay_count(self) -> int:
        return sum(1 for e in self.stays if e.duration_min >= self.min_stay_min)


def _distance_m(a, b) -> float:
    dn = (b[0] - a[0]) * METERS_PER_DEG_LAT
    de = (b[1] - a[1]) * METERS_PER_DEG_LAT * math.cos(math.radians((a[0] + b[0]) / 2))
    return math.hypot(dn, de)


def _place_stays(rng, k: int, cfg: ScheduleConfig):
    half = cfg.extent_m / 2
    for _ in range(1000):
        home = (rng.uniform(-half, half), rng.uniform(-half, half))
        pts = [home]
        ok = True
        for i in range(1, k):
            closing = cfg.return_home and k >= 3 and i == k - 1
            if closing:
                if math.dist(pts[-1], home) < cfg.hop_range_m[0]:
                    ok = False
                    break
                pts.append(home)
                continue
            for _ in range(200):
                ang = rng.uniform(0, 2 * math.pi)
                hop = rng.uniform(*cfg.hop_range_m)
                cand = (pts[-1][0] + hop * math.cos(ang), pts[-1][1] + hop * math.sin(ang))
                if abs(cand[0]) <= half and abs(cand[1]) <= half:
                    break
            else:
                ok = False
                break
            pts.append(cand)
        if ok:
            return [offset_latlon(cfg.center, e, n) for e, n in pts]
    raise ConfigError("could not place stays inside the spatial extent")


def generate_schedule(seed: int, config: ScheduleConfig = ScheduleConfig(), user_id: str = "u0",
                      day_id: dt.date = DEFAULT_DAY) -> DaySchedule:
    """Random day of ``K`` stays (``K`` uniform in ``stays_range``) tiling [0, 1440) minutes."""
    config.check()
    rng = np.random.default_rng(seed)
    k = int(rng.integers(config.stays_range[0], config.stays_range[1] + 1))
    for _ in range(100):
        places = _place_stays(rng, k, config)
        travel = [_distance_m(a, b) / config.speed_mps / 60.0 for a, b in zip(places, places[1:])]
        slack = 1440.0 - k * config.min_dwell_min - sum(travel)
        if slack >= 0:
            break
    else:
        raise ConfigError("could not fit stays and trips into one day")
    extra = rng.dirichlet(np.ones(k)) * slack

    episodes = []
    t = 0.0
    for i, place in enumerate(places):
        dwell = config.min_dwell_min + float(extra[i])
        end = 1440.0 if i == k - 1 else t + dwell
        episodes.append(Episode("stay", t, end, place, place))
        t = end
        if i < k - 1:
            episodes.append(Episode("travel", t, t + travel[i], place, places[i + 1]))
            t += travel[i]
    return DaySchedule(user_id, day_id, tuple(episodes), config.min_stay_min)


# ---------------------------------------------------------------------------
# emission

@dataclass(frozen=True)
class EmissionConfig:
    """How a device records a scheduled day.

    ``approach_buffer_m`` suppresses fixes while moving within that
    distance of the trip's endpoints; together with ``noise_cap_m`` it
    keeps trip pings out of reach of stay pings. ``dropout`` lists
    silent windows as ``(start_min, end_min)`` pairs and ``keep_prob``
    thins the remaining pings at random.
    """

    cadence_s: float = 60.0
    cadence_jitter_pct: float = 10.0
    accuracy_median_m: float = 10.0
    high_accuracy_share: float = 0.9
    noise_cap_m: float = 50.0
    approach_buffer_m: float = 200.0
    dropout: tuple[tuple[float, float], ...] = ()
    keep_prob: float = 1.0

    def __post_init__(self):
        if not self.cadence_s > 0:
            raise ConfigError("cadence_s must be positive")
        if not 0 <= self.cadence_jitter_pct < 100:
            raise ConfigError("cadence_jitter_pct must be in [0, 100)")
        if not 0 <= self.high_accuracy_share <= 1 or not 0 < self.keep_prob <= 1:
            raise ConfigError("shares and probabilities must lie in [0, 1]")


def _accuracy(rng, e: EmissionConfig) -> float:
    if rng.random() < e.high_accuracy_share:
        return float(np.clip(e.accuracy_median_m * math.exp(0.5 * rng.standard_normal()), 1.0, 99.0))
    return float(rng.uniform(100.0, 400.0))


def _noise(rng, accuracy_m: float, cap_m: float) -> tuple[float, float]:
    # accuracy is a 95 % radius; the radius is drawn from a Rayleigh law
    # truncated at min(3 sigma, cap) by inverse CDF
    sigma = accuracy_m / math.sqrt(-2 * math.log(0.05))
    r_max = min(3 * sigma, cap_m)
    f_max = 1.0 - math.exp(-(r_max**2) / (2 * sigma**2))
    r = sigma * math.sqrt(-2.0 * math.log(1.0 - rng.uniform(0, f_max)))
    ang = rng.uniform(0, 2 * math.pi)
    return r * math.cos(ang), r * math.sin(ang)


def _position(ep: Episode, t_min: float, buffer_m: float):
    if ep.kind == "stay":
        return ep.origin
    frac = (t_min - ep.start_min) / ep.duration_min if ep.duration_min > 0 else 1.0
    total = _distance_m(ep.origin, ep.destination)
    if total * min(frac, 1 - frac) < buffer_m:
        return None
    return (
        ep.origin[0] + frac * (ep.destination[0] - ep.origin[0]),
        ep.origin[1] + frac * (ep.destination[1] - ep.origin[1]),
    )


def emit_pings(sched: DaySchedule, e: EmissionConfig = EmissionConfig(), seed: int = 0,
               tz_offset_minutes: int = 0) -> UserDay:
    """Sample a day's pings from its schedule."""
    rng = np.random.default_rng(seed)
    starts = [ep.start_min for ep in sched.episodes]
    base = day_start_utc(sched.day_id, tz_offset_minutes)
    jitter = e.cadence_jitter_pct / 100.0

    pings = []
    last_ts = None
    t_s = float(rng.uniform(0, e.cadence_s))
    while t_s < 86400:
        t_now = t_s
        t_s += e.cadence_s * (1 + rng.uniform(-jitter, jitter))
        t_min = t_now / 60.0
        if any(a <= t_min < b for a, b in e.dropout):
            continue
        if e.keep_prob < 1 and rng.random() >= e.keep_prob:
            continue
        ep = sched.episodes[bisect.bisect_right(starts, t_min) - 1]
        pos = _position(ep, t_min, e.approach_buffer_m)
        if pos is None:
            continue
        ts = base + int(t_now)
        if ts == last_ts:
            continue
        acc = _accuracy(rng, e)
        de, dn = _noise(rng, acc, e.noise_cap_m)
        lat, lon = offset_latlon(pos, de, dn)
        pings.append(Ping(sched.user_id, ts, lat, lon, round(acc, 1)))
        last_ts = ts
    return UserDay(sched.user_id, sched.day_id, tuple(pings), tz_offset_minutes)


def expected_detected_count(sched: DaySchedule, e: EmissionConfig, params: StayParams = StayParams()) -> int:
    """Stays detectable after the dropout windows of ``e`` are applied.

    Each stay is cut by the windows into observed segments. Segments
    separated by a silence no longer than ``gap_split_min`` (allowing one
    cadence of slack) are merged back into runs. Runs that end in a long
    silence are never detected, so only the last run of each stay can
    count, and it does if it lasts at least ``min_stay_min`` plus two
    cadences. Meant for clear-cut configurations without random thinning.
    """
    slack_min = e.cadence_s * (1 + e.cadence_jitter_pct / 100) / 60.0
    count = 0
    for st in sched.stays:
        segs = [(st.start_min, st.end_min)]
        for a, b in sorted(e.dropout):
            nxt = []
            for s0, s1 in segs:
                if b <= s0 or a >= s1:
                    nxt.append((s0, s1))
                    continue
                if a > s0:
                    nxt.append((s0, a))
                if b < s1:
                    nxt.append((b, s1))
            segs = nxt
        runs = []
        for s0, s1 in segs:
            if runs and s0 - runs[-1][1] + slack_min <= params.gap_split_min:
                runs[-1] = (runs[-1][0], s1)
            else:
                runs.append((s0, s1))
        if runs and runs[-1][1] - runs[-1][0] - 2 * slack_min >= params.min_stay_min:
            count += 1
    return count


# ---------------------------------------------------------------------------
# corpora

def degraded_emission(rng) -> EmissionConfig:
    """A randomly sparse emission profile for low-quality days."""
    n_windows = int(rng.integers(0, 4))
    windows = []
    for _ in range(n_windows):
        start = float(rng.uniform(0, 1380))
        windows.append((start, start + float(rng.uniform(30, 360))))
    return EmissionConfig(
        cadence_s=float(rng.choice([60.0, 120.0, 300.0, 600.0, 900.0])),
        keep_prob=float(rng.uniform(0.05, 1.0)),
        high_accuracy_share=float(rng.uniform(0.3, 1.0)),
        dropout=tuple(windows),
    )


@dataclass(frozen=True)
class CorpusConfig:
    n_users: int = 132
    schedule: ScheduleConfig = ScheduleConfig()
    emission: EmissionConfig = EmissionConfig()
    n_degraded_users: int = 0
    degraded_days: int = 3
    start_day: dt.date = DEFAULT_DAY
    tz_offset_minutes: int = 0


def generate_corpus(n_users: int = 132, master_seed: int = 0, config: Optional[CorpusConfig] = None):
    """Corpus of one dense day per user plus optional degraded users.

    Returns ``(corpus, truth)`` where ``truth`` maps ``(user_id, day_id)``
    to the scheduled stay count.
    """
    if n_users < 1:
        raise ConfigError("n_users must be at least 1")
    cfg = replace(config or CorpusConfig(), n_users=n_users)
    days, truth = [], {}
    width = max(4, len(str(max(cfg.n_users, cfg.n_degraded_users))))
    for i in range(cfg.n_users):
        user = f"u{i:0{width}d}"
        sched = generate_schedule(derive_seed(master_seed, "schedule", user), cfg.schedule, user, cfg.start_day)
        days.append(emit_pings(sched, cfg.emission, derive_seed(master_seed, "emit", user), cfg.tz_offset_minutes))
        truth[(user, cfg.start_day)] = sched.true_stay_count
    for i in range(cfg.n_degraded_users):
        user = f"d{i:0{width}d}"
        for d in range(cfg.degraded_days):
            day_id = cfg.start_day + dt.timedelta(days=d)
            sched = generate_schedule(derive_seed(master_seed, "schedule", user, d), cfg.schedule, user, day_id)
            e = degraded_emission(np.random.default_rng(derive_seed(master_seed, "profile", user, d)))
            days.append(emit_pings(sched, e, derive_seed(master_seed, "emit", user, d), cfg.tz_offset_minutes))
            truth[(user, day_id)] = sched.true_stay_count
    days = [d for d in days if d.pings]
    days.sort(key=lambda d: (d.user_id, d.day_id))
    return Corpus(tuple(days), cfg.tz_offset_minutes, ("synthetic",)), truth


def generate_zone_fixtures(seed: int = 0, center=DEFAULT_CENTER, extent_m: float = 6000.0,
                           cell_deg: float = 0.001, block_cells: int = 10):
    """Zone profiles and a cell-to-zone lookup covering the synthetic extent.

    Zones are square blocks of ``block_cells`` grid cells on a side.
    Returns ``(profiles, lookup)``.
    """
    rng = np.random.default_rng(seed)
    half = extent_m / 2 + 500.0
    lo = cell_of(*offset_latlon(center, -half, -half), cell_deg)
    hi = cell_of(*offset_latlon(center, half, half), cell_deg)
    lookup = {}
    zones = {}
    for ci in range(lo[0], hi[0] + 1):
        for cj in range(lo[1], hi[1] + 1):
            zid = f"z{(ci - lo[0]) // block_cells:02d}{(cj - lo[1]) // block_cells:02d}"
            lookup[(ci, cj)] = zid
            zones[zid] = None
    profiles = []
    for zid in sorted(zones):
        dominant = int(rng.integers(0, 5))
        alpha = np.ones(4)
        if dominant < 4:
            alpha[dominant] = 8.0
        shares = rng.dirichlet(alpha) * 100.0
        profiles.append(ZoneProfile(
            zone_id=zid,
            population=int(rng.integers(500, 3000)),
            median_income=round(float(rng.lognormal(math.log(90000), 0.4)), 0),
            pct_bachelor_plus=round(float(rng.uniform(5, 80)), 2),
            race_shares=dict(zip(("White", "Black", "Asian", "Hispanic"), np.round(shares, 2).tolist())),
        ))
    return profiles, lookup
