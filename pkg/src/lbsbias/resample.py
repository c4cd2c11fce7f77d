"""Ground-truth day selection, random downsampling and bias records."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .metrics import QualityMetrics, metrics_vector
from .seeding import derive_seed
from .segmentation import Criterion, evaluate_criterion
from .staypoints import StayParams, count_stays
from .traj import Corpus, Ping, UserDay

log = logging.getLogger(__name__)

DEFAULT_RATES = (1, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90)
DEFAULT_REPS = 10


@dataclass(frozen=True)
class SelectionCriterion:
    criterion: Criterion = Criterion(48, 20, 500, "ground_truth")
    one_day_per_user: bool = True


def select_ground_truth_days(corpus: Corpus | Iterable[UserDay], sel: SelectionCriterion = SelectionCriterion()) -> list[UserDay]:
    """Days dense enough to stand in for ground truth.

    With ``one_day_per_user`` the day with most pings is kept per user
    (earliest date on ties). Result is sorted by user id.
    """
    passing = [d for d in corpus if evaluate_criterion(metrics_vector(d), sel.criterion)]
    if sel.one_day_per_user:
        best: dict[str, UserDay] = {}
        for d in passing:
            cur = best.get(d.user_id)
            if cur is None or (len(d), cur.day_id) > (len(cur), d.day_id):
                best[d.user_id] = d
        passing = list(best.values())
    passing.sort(key=lambda d: (d.user_id, d.day_id))
    if not passing:
        log.warning("no day satisfies the ground-truth selection criterion")
    return passing


@dataclass(frozen=True)
class ResampledDay:
    parent: tuple[str, str]
    rate_pct: float
    repetition: int
    seed: int
    day: UserDay

    @property
    def pings(self) -> tuple[Ping, ...]:
        return self.day.pings

    @property
    def parent_key(self) -> str:
        return f"{self.parent[0]}|{self.parent[1]}"


def sample_size(n: int, rate_pct: float) -> int:
    # the tolerance absorbs float error in products like 0.07 * 1400
    return int(math.floor(n * rate_pct / 100.0 + 1e-9))


def resample_day(day: UserDay, rate_pct: float, seed: int, repetition: int = 0) -> ResampledDay:
    """Keep ``floor(rate_pct/100 * n)`` pings chosen uniformly without replacement."""
    if not 0 < rate_pct <= 100:
        raise ValueError(f"rate_pct must be in (0, 100], got {rate_pct}")
    n = len(day.pings)
    k = sample_size(n, rate_pct)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(n, size=k, replace=False)) if k else np.empty(0, dtype=int)
    sub = day.with_pings(day.pings[i] for i in keep)
    return ResampledDay((day.user_id, day.day_id.isoformat()), rate_pct, repetition, seed, sub)


def variant_seed(master_seed: int, user_id: str, day_id: str, rate_pct: float, repetition: int) -> int:
    return derive_seed(master_seed, user_id, day_id, float(rate_pct), repetition)


def generate_resample_grid(
    days: Sequence[UserDay], rates: Sequence[float] = DEFAULT_RATES, reps: int = DEFAULT_REPS, master_seed: int = 0
) -> Iterator[ResampledDay]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    for r in rates:
        if not 0 < r <= 100:
            raise ValueError(f"rate {r} outside (0, 100]")
    for day in days:
        for r in rates:
            for rep in range(reps):
                seed = variant_seed(master_seed, day.user_id, day.day_id.isoformat(), r, rep)
                yield resample_day(day, r, seed, rep)


@dataclass(frozen=True)
class BiasRecord:
    parent_day_key: str
    rate_pct: float
    repetition: int
    metrics: QualityMetrics
    stays_truth: int
    stays_resampled: int

    @property
    def bias(self) -> int:
        return self.stays_resampled - self.stays_truth


def compute_bias(
    truth: UserDay, variant: ResampledDay, params: StayParams = StayParams(), stays_truth: Optional[int] = None
) -> BiasRecord:
    """Bias record of one variant; ``stays_truth`` may be passed to reuse a count."""
    if variant.parent != (truth.user_id, truth.day_id.isoformat()):
        raise ValueError(f"variant of {variant.parent} does not belong to {truth.key}")
    if stays_truth is None:
        stays_truth = count_stays(truth, params)
    return BiasRecord(
        parent_day_key=truth.key,
        rate_pct=variant.rate_pct,
        repetition=variant.repetition,
        metrics=metrics_vector(variant.day),
        stays_truth=stays_truth,
        stays_resampled=count_stays(variant.day, params),
    )


def bias_records_for_day(day: UserDay, rates=DEFAULT_RATES, reps=DEFAULT_REPS, master_seed=0, params=StayParams()):
    truth_count = count_stays(day, params)
    return [
        compute_bias(day, v, params, truth_count)
        for v in generate_resample_grid([day], rates, reps, master_seed)
    ]


def run_bias_experiment(days, rates=DEFAULT_RATES, reps=DEFAULT_REPS, master_seed=0, params=StayParams(), threads=1):
    """Bias records for every (day, rate, repetition), ordered by day then rate then repetition."""
    if threads <= 1:
        out = []
        for d in days:
            out.extend(bias_records_for_day(d, rates, reps, master_seed, params))
        return out
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    work = partial(bias_records_for_day, rates=rates, reps=reps, master_seed=master_seed, params=params)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return [rec for chunk in pool.map(work, days) for rec in chunk]


def mean_bias_by_rate(records: Iterable[BiasRecord]) -> dict[float, float]:
    sums: dict[float, list[int]] = {}
    for r in records:
        sums.setdefault(r.rate_pct, []).append(r.bias)
    return {rate: float(np.mean(v)) for rate, v in sorted(sums.items())}
