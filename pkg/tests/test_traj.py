import datetime as dt
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbsbias.traj import (
    Ping, RecordError, ValidationError, build_corpus, format_ping_record,
    parse_ping_record, partition_user_days, validate_user_day,
)

from conftest import make_day


def test_parse_full_record():
    p = parse_ping_record("u1,1577836800,42.36,-71.06,25")
    assert p == Ping("u1", 1577836800, 42.36, -71.06, 25.0)


def test_parse_missing_accuracy():
    assert parse_ping_record("u1,1577836800,42.36,-71.06,").accuracy_m is None
    assert parse_ping_record("u1,1577836800,42.36,-71.06").accuracy_m is None


def test_parse_rejects_out_of_range_lat():
    with pytest.raises(RecordError, match="lat out of range") as info:
        parse_ping_record("u1,1577836800,99.0,-71.06,25", line_no=7)
    assert info.value.line_no == 7


@pytest.mark.parametrize("line", [
    "u1,notatime,42.36,-71.06,25",
    "u1,1577836800,abc,-71.06,25",
    "u1,1577836800,42.36",
    "u1,1577836800,42.36,-200,25",
    "u1,1577836800,42.36,-71.06,-3",
])
def test_parse_errors(line):
    with pytest.raises(RecordError):
        parse_ping_record(line)


def test_parse_iso_timestamp_and_custom_schema():
    p = parse_ping_record("42.36;-71.06;2020-01-01T00:00:00Z;u9", {"lat": 0, "lon": 1, "timestamp": 2, "user_id": 3},
                          delimiter=";")
    assert p.timestamp == 1577836800 and p.user_id == "u9" and p.accuracy_m is None
    naive = parse_ping_record("u1,2020-01-01T00:00:00,42.36,-71.06,5")
    assert naive.timestamp == 1577836800


@given(
    user=st.text(alphabet="abcdefgh0123456789_", min_size=1, max_size=8),
    ts=st.integers(0, 2**33),
    lat=st.floats(-90, 90, allow_nan=False),
    lon=st.floats(-180, 180, allow_nan=False),
    acc=st.one_of(st.none(), st.floats(0, 1e4, allow_nan=False)),
)
def test_round_trip(user, ts, lat, lon, acc):
    p = Ping(user, ts, lat, lon, acc)
    assert parse_ping_record(format_ping_record(p)) == p


def _utc(y, m, d, hh, mm):
    return int(dt.datetime(y, m, d, hh, mm, tzinfo=dt.timezone.utc).timestamp())


def test_partition_splits_at_midnight_utc():
    pings = [Ping("u", _utc(2020, 1, 1, 23, 30), 0, 0), Ping("u", _utc(2020, 1, 2, 0, 30), 0, 0)]
    days = partition_user_days(pings, 0)
    assert [(d.day_id, len(d)) for d in days] == [(dt.date(2020, 1, 1), 1), (dt.date(2020, 1, 2), 1)]


def test_partition_with_negative_offset_keeps_same_local_day():
    # 23:30 and 00:30 UTC are 18:30 and 19:30 at UTC-5
    pings = [Ping("u", _utc(2020, 1, 1, 23, 30), 0, 0), Ping("u", _utc(2020, 1, 2, 0, 30), 0, 0)]
    days = partition_user_days(pings, -300)
    assert len(days) == 1 and days[0].day_id == dt.date(2020, 1, 1) and len(days[0]) == 2
    validate_user_day(days[0])


def test_partition_empty():
    assert partition_user_days([], 0) == []


def test_partition_collapses_duplicates_keeping_first():
    a = Ping("u", 100, 1.0, 1.0, 5.0)
    b = Ping("u", 100, 2.0, 2.0, 50.0)
    days = partition_user_days([a, b])
    assert days[0].pings == (a,)


pings_strategy = st.lists(
    st.builds(Ping, st.sampled_from(["a", "b", "c"]), st.integers(1_577_836_800, 1_577_836_800 + 5 * 86400),
              st.floats(-89, 89), st.floats(-179, 179)),
    max_size=80,
)


@settings(max_examples=60)
@given(pings=pings_strategy, offset=st.integers(-720, 840), seed=st.integers(0, 1000))
def test_partition_conserves_and_is_order_independent(pings, offset, seed):
    days = partition_user_days(pings, offset)
    distinct = {(p.user_id, p.timestamp) for p in pings}
    assert sum(len(d) for d in days) == len(distinct)
    shuffled = pings[:]
    random.Random(seed).shuffle(shuffled)
    # first-seen duplicates can differ after shuffling, so compare keys
    key = lambda ds: [(d.user_id, d.day_id, tuple(p.timestamp for p in d.pings)) for d in ds]
    assert key(partition_user_days(shuffled, offset)) == key(days)
    for d in days:
        validate_user_day(d)


def test_validate_accepts_sorted_day():
    day = make_day([0, 10, 20])
    assert validate_user_day(day) is day


def test_validate_rejects_unsorted():
    day = make_day([10, 5])
    with pytest.raises(ValidationError) as info:
        validate_user_day(day)
    assert info.value.invariant == "unsorted"


def test_validate_rejects_duplicate():
    day = make_day([10, 10])
    with pytest.raises(ValidationError) as info:
        validate_user_day(day)
    assert info.value.invariant == "duplicate"


def test_validate_rejects_cross_day():
    day = make_day([10, 1500])
    with pytest.raises(ValidationError) as info:
        validate_user_day(day)
    assert info.value.invariant == "cross-day"


def test_corpus_rejects_duplicate_user_days():
    day = make_day([1])
    from lbsbias.traj import Corpus
    with pytest.raises(ValueError):
        Corpus((day, day))
    assert len(build_corpus(day.pings)) == 1
