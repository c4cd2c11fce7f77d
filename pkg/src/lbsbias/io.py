"""Delimited-text readers and writers for every table the toolkit exchanges."""

from __future__ import annotations

import csv
import datetime as dt
import logging
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .metrics import QualityMetrics
from .resample import BiasRecord
from .segmentation import ZoneProfile
from .traj import DEFAULT_COLUMNS, Ping, RecordError, format_ping_record, parse_ping_record

log = logging.getLogger(__name__)

METRIC_HEADER = ["user_id", "day_id", "n_obs", "temporal_occupancy", "max_gap_min", "pct_high_acc", "burstiness"]
BIAS_HEADER = [
    "parent_day_key", "rate_pct", "repetition", "n_obs", "temporal_occupancy", "max_gap_min",
    "pct_high_acc", "burstiness", "stays_truth", "stays_resampled", "bias",
]
STAY_HEADER = ["user_id", "day_id", "stay_idx", "centroid_lat", "centroid_lon", "start_ts", "end_ts", "n_pings"]
ZONE_HEADER = [
    "zone_id", "population", "median_income", "pct_bachelor_plus",
    "pct_white", "pct_black", "pct_asian", "pct_hispanic",
]
RACE_COLUMNS = {"pct_white": "White", "pct_black": "Black", "pct_asian": "Asian", "pct_hispanic": "Hispanic"}


class IngestionError(RuntimeError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return float(text) if text else None


def read_pings(
    path, columns: Optional[Mapping[str, str]] = None, on_bad_record: str = "skip"
) -> tuple[list[Ping], list[RecordError]]:
    """Read a header-bearing ping file.

    ``columns`` maps field names (``user_id``, ``timestamp``, ``lat``,
    ``lon``, ``accuracy_m``) to header names when they differ. Lines
    starting with ``#`` are ignored. Bad records are collected and skipped
    or, with ``on_bad_record="abort"``, raise :class:`IngestionError`.
    """
    if on_bad_record not in ("skip", "abort"):
        raise ValueError("on_bad_record must be 'skip' or 'abort'")
    columns = dict(columns or {})
    pings, errors = [], []
    schema = None
    with open(path, newline="") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if schema is None:
                header = [h.strip() for h in line.rstrip("\r\n").split(",")]
                schema = {}
                for name in DEFAULT_COLUMNS:
                    col = columns.get(name, name)
                    if col in header:
                        schema[name] = header.index(col)
                continue
            try:
                pings.append(parse_ping_record(line, schema, line_no))
            except RecordError as exc:
                if on_bad_record == "abort":
                    raise IngestionError(f"{path}: {exc}") from exc
                errors.append(exc)
    if errors:
        log.warning("%s: skipped %d bad records", path, len(errors))
    return pings, errors


def write_pings(path, pings: Iterable[Ping]):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(DEFAULT_COLUMNS) + "\n")
        for p in pings:
            fh.write(format_ping_record(p) + "\n")


def write_metrics(path, rows: Iterable[tuple[str, dt.date, QualityMetrics]]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for user, day, m in rows:
            w.writerow([user, str(day), m.n_observations, m.temporal_occupancy,
                        _fmt(m.max_record_gap_min), _fmt(m.pct_high_accuracy), _fmt(m.burstiness)])


def read_metrics(path) -> dict[tuple[str, dt.date], QualityMetrics]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            n = int(row["n_obs"])
            out[(row["user_id"], dt.date.fromisoformat(row["day_id"]))] = QualityMetrics(
                n, int(row["temporal_occupancy"]), float(row["max_gap_min"]),
                float(row["pct_high_acc"]), _opt_float(row["burstiness"]), is_empty=n == 0,
            )
    return out


def write_bias_table(path, records: Iterable[BiasRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BIAS_HEADER)
        for r in records:
            m = r.metrics
            w.writerow([r.parent_day_key, _fmt(float(r.rate_pct)), r.repetition, m.n_observations,
                        m.temporal_occupancy, _fmt(m.max_record_gap_min), _fmt(m.pct_high_accuracy),
                        _fmt(m.burstiness), r.stays_truth, r.stays_resampled, r.bias])


def read_bias_table(path) -> list[BiasRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            n = int(row["n_obs"])
            m = QualityMetrics(n, int(row["temporal_occupancy"]), float(row["max_gap_min"]),
                               float(row["pct_high_acc"]), _opt_float(row["burstiness"]), is_empty=n == 0)
            rec = BiasRecord(row["parent_day_key"], float(row["rate_pct"]), int(row["repetition"]), m,
                             int(row["stays_truth"]), int(row["stays_resampled"]))
            if rec.bias != int(row["bias"]):
                raise IngestionError(f"{path}: bias column inconsistent for {rec.parent_day_key}")
            out.append(rec)
    return out


def write_stays(path, rows):
    """``rows`` yields ``(user_id, day_id, [StayPoint, ...])``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAY_HEADER)
        for user, day, stays in rows:
            for idx, s in enumerate(stays):
                w.writerow([user, str(day), idx, _fmt(s.centroid_lat), _fmt(s.centroid_lon),
                            s.start_ts, s.end_ts, s.n_pings])


def write_truth(path, truth: Mapping[tuple[str, dt.date], int]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "day_id", "true_stay_count"])
        for (user, day) in sorted(truth):
            w.writerow([user, str(day), truth[(user, day)]])


def read_truth(path) -> dict[tuple[str, dt.date], int]:
    with open(path, newline="") as fh:
        return {(r["user_id"], dt.date.fromisoformat(r["day_id"])): int(r["true_stay_count"])
                for r in csv.DictReader(fh)}


def write_zone_profiles(path, profiles: Sequence[ZoneProfile]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ZONE_HEADER)
        for z in profiles:
            shares = z.race_shares or {}
            w.writerow([z.zone_id, z.population, _fmt(z.median_income), _fmt(z.pct_bachelor_plus)]
                       + [_fmt(shares.get(r)) for r in RACE_COLUMNS.values()])


def read_zone_profiles(path) -> list[ZoneProfile]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            shares = {race: _opt_float(row.get(col, "") or "") for col, race in RACE_COLUMNS.items()}
            shares = {k: v for k, v in shares.items() if v is not None}
            out.append(ZoneProfile(
                zone_id=row["zone_id"],
                population=int(float(row["population"])),
                median_income=_opt_float(row.get("median_income", "") or ""),
                pct_bachelor_plus=_opt_float(row.get("pct_bachelor_plus", "") or ""),
                race_shares=shares or None,
            ))
    return out


def write_zone_lookup(path, lookup: Mapping[tuple[int, int], str]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell_lat_idx", "cell_lon_idx", "zone_id"])
        for key in sorted(lookup):
            w.writerow([key[0], key[1], lookup[key]])


def read_zone_lookup(path) -> dict[tuple[int, int], str]:
    with open(path, newline="") as fh:
        return {(int(r["cell_lat_idx"]), int(r["cell_lon_idx"])): r["zone_id"] for r in csv.DictReader(fh)}


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
