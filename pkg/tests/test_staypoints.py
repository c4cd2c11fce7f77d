import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbsbias.resample import resample_day
from lbsbias.staypoints import StayParams, count_stays, detect_stays, haversine_m
from lbsbias.synth import generate_schedule, emit_pings, ScheduleConfig

from conftest import BOSTON, make_day, near


def test_haversine_basics():
    assert haversine_m(BOSTON, BOSTON) == 0.0
    assert haversine_m((0, 0), (0, 1)) == pytest.approx(2 * math.pi * 6_371_000 / 360, rel=1e-12)


@given(st.floats(-89, 89), st.floats(-179, 179), st.floats(-89, 89), st.floats(-179, 179))
def test_haversine_symmetric(a1, o1, a2, o2):
    assert haversine_m((a1, o1), (a2, o2)) == pytest.approx(haversine_m((a2, o2), (a1, o1)), abs=1e-6)


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        StayParams(gap_split_min=0)


def test_single_dwell():
    coords = [near(BOSTON, 5 * math.cos(k), 5 * math.sin(k)) for k in range(60)]
    stays = detect_stays(make_day(range(60), coords=coords))
    assert len(stays) == 1
    assert stays[0].dwell_min == pytest.approx(59.0)
    assert stays[0].n_pings == 60
    assert haversine_m((stays[0].centroid_lat, stays[0].centroid_lon), BOSTON) < 5


def test_gap_splits_into_short_segments():
    minutes = list(range(0, 11)) + list(range(45, 61))
    day = make_day(minutes)
    assert count_stays(day) == 0
    # without the gap rule both pieces would merge into a 60 minute stay
    assert count_stays(day, StayParams(gap_split_min=40)) == 1


def test_gap_discards_interrupted_candidate():
    # 30 minutes, 35 minute silence, 25 minutes at the same spot: only the
    # run that ends with the device leaving is a stay
    minutes = list(range(0, 31)) + list(range(66, 91)) + [92]
    coords = [BOSTON] * (len(minutes) - 1) + [near(BOSTON, 500)]
    stays = detect_stays(make_day(minutes, coords=coords))
    assert len(stays) == 1
    assert stays[0].dwell_min == pytest.approx(24.0)


def test_two_dwells_one_km_apart():
    far = near(BOSTON, 1000)
    minutes, coords = [], []
    for m in range(0, 30):
        minutes.append(m); coords.append(BOSTON)
    for m in range(30, 40):
        minutes.append(m); coords.append(near(BOSTON, 100 * (m - 29)))
    for m in range(40, 70):
        minutes.append(m); coords.append(far)
    stays = detect_stays(make_day(minutes, coords=coords))
    assert len(stays) == 2


def test_empty_day():
    assert detect_stays(make_day([])) == []
    assert count_stays(make_day([])) == 0


@pytest.mark.parametrize("k", [1, 8])
def test_synthetic_k_dwell_days(k):
    cfg = ScheduleConfig(stays_range=(k, k))
    for seed in range(5):
        sched = generate_schedule(seed, cfg)
        assert sched.true_stay_count == k
        assert count_stays(emit_pings(sched, seed=seed)) == k


def _check_invariants(day, stays, p):
    for a, b in zip(stays, stays[1:]):
        assert a.end_ts < b.start_ts
    ts = [x.timestamp for x in day.pings]
    by_ts = {x.timestamp: x for x in day.pings}
    for s in stays:
        assert s.end_ts - s.start_ts >= p.min_stay_min * 60
        assert s.n_pings >= 2
        members = [t for t in ts if s.start_ts <= t <= s.end_ts]
        assert len(members) == s.n_pings
        assert all(b - a <= p.gap_split_min * 60 for a, b in zip(members, members[1:]))
        anchor = by_ts[s.start_ts]
        assert all(haversine_m((anchor.lat, anchor.lon), (by_ts[t].lat, by_ts[t].lon)) <= p.roaming_radius_m + 1e-6
                   for t in members)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), rate=st.sampled_from([2, 5, 10, 30, 70]),
       radius=st.sampled_from([50.0, 100.0, 200.0]), min_stay=st.sampled_from([10.0, 20.0]))
def test_detection_invariants(seed, rate, radius, min_stay):
    p = StayParams(radius, min_stay, 30.0)
    day = emit_pings(generate_schedule(seed), seed=seed)
    sub = resample_day(day, rate, seed).day
    for d in (day, sub):
        stays = detect_stays(d, p)
        assert stays == detect_stays(d, p)
        _check_invariants(d, stays, p)
    parent_ts = set(day.timestamps)
    for s in detect_stays(sub, p):
        assert {t for t in sub.timestamps if s.start_ts <= t <= s.end_ts} <= parent_ts
