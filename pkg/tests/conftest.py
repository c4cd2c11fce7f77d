import datetime as dt

import pytest

from lbsbias.synth import offset_latlon
from lbsbias.traj import Ping, UserDay, day_start_utc

DAY = dt.date(2020, 1, 1)
BOSTON = (42.36, -71.06)

_acceptance_lines: list[str] = []


def make_day(minutes, user="u1", day=DAY, coords=None, accuracy=10.0, tz=0):
    """User-day with pings at the given local minutes after midnight.

    ``coords`` may be one (lat, lon) for every ping or one per ping;
    ``accuracy`` likewise.
    """
    base = day_start_utc(day, tz)
    n = len(minutes)
    if coords is None or isinstance(coords[0], (int, float)):
        coords = [coords or BOSTON] * n
    if not isinstance(accuracy, (list, tuple)):
        accuracy = [accuracy] * n
    pings = tuple(
        Ping(user, base + int(round(m * 60)), c[0], c[1], a) for m, c, a in zip(minutes, coords, accuracy)
    )
    return UserDay(user, day, pings, tz)


def near(origin, east_m, north_m=0.0):
    return offset_latlon(origin, east_m, north_m)


@pytest.fixture
def record_criterion():
    def _record(number: int, name: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] AC{number:02d} {name}" + (f" ({detail})" if detail else "")
        _acceptance_lines.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)
