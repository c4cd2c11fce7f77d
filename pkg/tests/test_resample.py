import datetime as dt
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbsbias.resample import (
    DEFAULT_RATES, BiasRecord, compute_bias, generate_resample_grid, mean_bias_by_rate,
    resample_day, run_bias_experiment, sample_size, select_ground_truth_days, variant_seed,
)
from lbsbias.metrics import metrics_vector
from lbsbias.traj import Corpus

from conftest import DAY, make_day


def dense_day(n, user="u1", day=DAY):
    step = 1440.0 / n
    return make_day([k * step for k in range(n)], user=user, day=day)


def test_selection_keeps_best_day_per_user():
    d600 = dense_day(600)
    d700 = dense_day(700, day=DAY + dt.timedelta(days=1))
    other = dense_day(500, user="u2")
    sparse = make_day(range(0, 1440, 60), user="u3")
    got = select_ground_truth_days(Corpus((d600, d700, other, sparse)))
    assert [(d.user_id, len(d)) for d in got] == [("u1", 700), ("u2", 500)]


def test_selection_tie_takes_earliest():
    a, b = dense_day(600), dense_day(600, day=DAY + dt.timedelta(days=1))
    assert select_ground_truth_days([b, a])[0].day_id == DAY


def test_selection_empty_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert select_ground_truth_days([make_day(range(0, 1440, 60))]) == []
    assert "no day" in caplog.text


def test_selection_132_synthetic_users():
    from lbsbias.synth import generate_corpus
    corpus, truth = generate_corpus(132, master_seed=3)
    assert len(select_ground_truth_days(corpus)) == 132
    assert len(truth) == 132


def test_sample_size_floor():
    assert sample_size(500, 10) == 50
    assert sample_size(1400, 7) == 98
    assert sample_size(99, 1) == 0
    assert sample_size(1437, 90) == 1293


def test_resample_identity_and_subset():
    day = dense_day(500)
    full = resample_day(day, 100, seed=1)
    assert full.pings == day.pings
    tenth = resample_day(day, 10, seed=1)
    assert len(tenth.pings) == 50
    assert set(tenth.pings) <= set(day.pings)
    assert list(tenth.day.timestamps) == sorted(tenth.day.timestamps)
    assert resample_day(day, 10, seed=1) == tenth
    assert resample_day(day, 10, seed=2).pings != tenth.pings


def test_resample_to_empty():
    v = resample_day(dense_day(50), 1, seed=0)
    assert v.pings == () and metrics_vector(v.day).is_empty


@pytest.mark.parametrize("rate", [0, -5, 100.5])
def test_resample_rejects_bad_rate(rate):
    with pytest.raises(ValueError):
        resample_day(dense_day(10), rate, seed=0)


@settings(max_examples=50)
@given(n=st.integers(0, 800), rate=st.floats(0.5, 100), seed=st.integers(0, 2**63))
def test_resample_cardinality(n, rate, seed):
    day = dense_day(n) if n else make_day([])
    v = resample_day(day, rate, seed)
    assert len(v.pings) == sample_size(n, rate)
    assert set(v.pings) <= set(day.pings)


def test_grid_cardinality_and_determinism():
    days = [dense_day(100, user=f"u{i:03d}") for i in range(132)]
    rates = DEFAULT_RATES[:10]
    grid = list(generate_resample_grid(days, rates, 10, master_seed=7))
    assert len(grid) == 13_200
    again = list(generate_resample_grid(days, rates, 10, master_seed=7))
    assert grid == again
    other = list(generate_resample_grid(days[:2], rates, 10, master_seed=8))
    assert [v.seed for v in other] != [v.seed for v in grid[:200]]


def test_grid_seed_independent_of_order():
    days = [dense_day(100, user=f"u{i}") for i in range(3)]
    fwd = {(v.parent, v.rate_pct, v.repetition): v.pings for v in generate_resample_grid(days, (5, 50), 2, 1)}
    rev = {(v.parent, v.rate_pct, v.repetition): v.pings
           for v in generate_resample_grid(days[::-1], (50, 5), 2, 1)}
    assert fwd == rev
    assert variant_seed(1, "u", "2020-01-01", 5, 0) == variant_seed(1, "u", "2020-01-01", 5.0, 0)


def test_grid_rejects_bad_arguments():
    with pytest.raises(ValueError):
        list(generate_resample_grid([dense_day(10)], (5,), 0))
    with pytest.raises(ValueError):
        list(generate_resample_grid([dense_day(10)], (0,), 1))


def test_bias_definition():
    m = metrics_vector(dense_day(10))
    assert BiasRecord("u|d", 10, 0, m, 8, 5).bias == -3


def test_compute_bias_identity():
    day = dense_day(600)
    rec = compute_bias(day, resample_day(day, 100, seed=0))
    assert rec.bias == 0 and rec.stays_truth == 1
    assert rec.parent_day_key == day.key


def test_compute_bias_parent_mismatch():
    a, b = dense_day(600), dense_day(600, user="u2")
    with pytest.raises(ValueError):
        compute_bias(a, resample_day(b, 50, seed=0))


def _oracle_single_dwell(variant_minutes):
    # one continuous stay is detected iff the trailing run without a
    # 30-minute silence spans at least 20 minutes
    if len(variant_minutes) < 2:
        return 0
    start = len(variant_minutes) - 1
    while start > 0 and variant_minutes[start] - variant_minutes[start - 1] <= 30:
        start -= 1
    return int(variant_minutes[-1] - variant_minutes[start] >= 20)


def test_dense_single_dwell_rate_one():
    day = dense_day(1440)
    biases = []
    for seed in range(40):
        rec = compute_bias(day, v := resample_day(day, 1, seed))
        minutes = [(t - day.pings[0].timestamp) / 60 for t in v.day.timestamps]
        assert rec.stays_resampled == _oracle_single_dwell(minutes)
        biases.append(rec.bias)
    assert compute_bias(day, resample_day(day, 1, 0)).bias == -1
    assert biases.count(-1) > 30


def test_experiment_ordering_and_parallel_equivalence():
    from lbsbias.synth import generate_corpus
    corpus, _ = generate_corpus(3, master_seed=11)
    serial = run_bias_experiment(list(corpus), (5, 50), 2, master_seed=4)
    assert [(r.parent_day_key, r.rate_pct, r.repetition) for r in serial] == sorted(
        (r.parent_day_key, r.rate_pct, r.repetition) for r in serial)
    assert run_bias_experiment(list(corpus), (5, 50), 2, master_seed=4, threads=2) == serial
    means = mean_bias_by_rate(serial)
    assert list(means) == [5, 50]
