"""Command-line entry point: ``lbsbias <command> [--config FILE] [--out-dir DIR]``.

Commands: synth, quality, qualify, segment, bias, regress, pipeline.
Configuration is a JSON file with flat keys; command-line flags override
file values. A pipeline manifest is itself a valid config file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import io as lio
from .metrics import metrics_vector
from .resample import DEFAULT_RATES, DEFAULT_REPS, SelectionCriterion, run_bias_experiment, select_ground_truth_days
from .segmentation import (
    DEFAULT_CRITERIA, Criterion, InsufficientDataError, compare_groups, group_summary,
    infer_home_zones, majority_race_segments, per_zone_rates, qualification_table, qualified_rates,
    quintile_segments,
)
from .staypoints import StayParams, detect_stays
from .stats import MODELS, ClusterError, RankError, fit_bias_model
from .synth import CorpusConfig, generate_corpus, generate_zone_fixtures
from .traj import Corpus, build_corpus

log = logging.getLogger("lbsbias")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_EMPTY_SELECTION = 4
EXIT_NUMERIC = 5

DEFAULTS = {
    "input": [],
    "tz_offset_minutes": 0,
    "columns": {},
    "on_bad_record": "skip",
    "criteria": [asdict(c) for c in DEFAULT_CRITERIA],
    "selection": {"min_temporal_occupancy": 48, "max_gap_min": 20, "min_records": 500, "one_day_per_user": True},
    "roaming_radius_m": 100.0,
    "min_stay_min": 20.0,
    "gap_split_min": 30.0,
    "rates": list(DEFAULT_RATES),
    "reps": DEFAULT_REPS,
    "master_seed": 0,
    "models": ["M1", "M2", "M3"],
    "correction": "CR1",
    "n_users": 132,
    "n_degraded_users": 0,
    "degraded_days": 3,
    "zones": False,
    "zone_profiles": None,
    "zone_lookup": None,
    "cell_deg": 0.001,
    "bias_table": None,
    "vif_warn": 10.0,
}


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


# ---------------------------------------------------------------------------
# config

def load_config(path=None, overrides=None) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CommandError(f"cannot read config {path}: {exc}", EXIT_CONFIG) from None
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise CommandError(f"unknown config keys: {sorted(unknown)}", EXIT_CONFIG)
        cfg.update(loaded)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    if isinstance(cfg["input"], str):
        cfg["input"] = [cfg["input"]]
    for p in cfg["input"] + [cfg[k] for k in ("zone_profiles", "zone_lookup", "bias_table") if cfg[k]]:
        if not Path(p).exists():
            raise CommandError(f"missing input file {p}", EXIT_CONFIG)
    if cfg["correction"] not in ("CR0", "CR1"):
        raise CommandError("correction must be CR0 or CR1", EXIT_CONFIG)
    if any(m not in MODELS for m in cfg["models"]):
        raise CommandError(f"models must be among {sorted(MODELS)}", EXIT_CONFIG)
    return cfg


def _criteria(cfg):
    return [Criterion(**c) for c in cfg["criteria"]]


def _selection(cfg):
    s = dict(cfg["selection"])
    one = s.pop("one_day_per_user", True)
    return SelectionCriterion(Criterion(label="ground_truth", **s), one)


def _stay_params(cfg):
    return StayParams(cfg["roaming_radius_m"], cfg["min_stay_min"], cfg["gap_split_min"])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# stages

def _corpus(cfg, out: Path, allow_synth: bool = True) -> Corpus:
    if cfg["input"]:
        pings = []
        for path in cfg["input"]:
            try:
                got, errors = lio.read_pings(path, cfg["columns"], cfg["on_bad_record"])
            except lio.IngestionError as exc:
                raise CommandError(str(exc), EXIT_INGEST) from None
            if errors:
                log.warning("%s: %d bad records skipped", path, len(errors))
            pings.extend(got)
        return build_corpus(pings, cfg["tz_offset_minutes"], cfg["input"])
    if not allow_synth:
        raise CommandError("no input files configured", EXIT_CONFIG)
    return cmd_synth(cfg, out)


def cmd_synth(cfg, out: Path) -> Corpus:
    corpus_cfg = CorpusConfig(n_degraded_users=cfg["n_degraded_users"], degraded_days=cfg["degraded_days"],
                              tz_offset_minutes=cfg["tz_offset_minutes"])
    corpus, truth = generate_corpus(cfg["n_users"], cfg["master_seed"], corpus_cfg)
    lio.write_pings(out / "pings.csv", (p for d in corpus for p in d.pings))
    lio.write_truth(out / "truth.csv", truth)
    if cfg["zones"]:
        profiles, lookup = generate_zone_fixtures(cfg["master_seed"], cell_deg=cfg["cell_deg"])
        lio.write_zone_profiles(out / "zone_profiles.csv", profiles)
        lio.write_zone_lookup(out / "zone_lookup.csv", lookup)
    log.info("synthesised %d user-days", len(corpus))
    return corpus


def cmd_quality(cfg, out: Path, corpus=None):
    corpus = corpus if corpus is not None else _corpus(cfg, out, allow_synth=False)
    rows = [(d.user_id, d.day_id, metrics_vector(d)) for d in corpus]
    if not rows:
        log.warning("empty corpus; writing header only")
    lio.write_metrics(out / "quality.csv", rows)
    return rows


def cmd_qualify(cfg, out: Path, corpus=None):
    corpus = corpus if corpus is not None else _corpus(cfg, out, allow_synth=False)
    criteria = _criteria(cfg)
    metrics = [metrics_vector(d) for d in corpus]
    table = qualification_table(metrics, criteria)
    with open(out / "qualify.csv", "w") as fh:
        fh.write(",".join(["user_id", "day_id"] + [c.label for c in criteria]) + "\n")
        for d, row in zip(corpus, table):
            fh.write(",".join([d.user_id, str(d.day_id)] + [str(int(v)) for v in row]) + "\n")
    rates = qualified_rates(table)
    summary = {
        "n_days": int(table.shape[0]),
        "qualified_days": {c.label: int(n) for c, n in zip(criteria, table.sum(axis=0))},
        "qualified_rate_pct": {c.label: float(r) for c, r in zip(criteria, rates)},
    }
    (out / "qualify_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


SCHEMES = (
    ("income", "median_income", "A"),
    ("education", "pct_bachelor_plus", "B"),
)


def cmd_segment(cfg, out: Path, corpus=None):
    if not (cfg["zone_profiles"] and cfg["zone_lookup"]):
        raise CommandError("segment needs zone_profiles and zone_lookup files", EXIT_CONFIG)
    corpus = corpus if corpus is not None else _corpus(cfg, out, allow_synth=False)
    profiles = lio.read_zone_profiles(cfg["zone_profiles"])
    lookup = lio.read_zone_lookup(cfg["zone_lookup"])
    by_id = {z.zone_id: z for z in profiles}
    criteria = _criteria(cfg)
    homes = infer_home_zones(corpus.pings_by_user(), cfg["cell_deg"], lookup, corpus.tz_offset_minutes)
    homes = {u: z for u, z in homes.items() if z in by_id}
    day_metrics = {(d.user_id, d.day_id): metrics_vector(d) for d in corpus}

    schemes = []
    for name, attr, prefix in SCHEMES:
        try:
            schemes.append((name, quintile_segments(profiles, attr, prefix), f"{prefix}5"))
        except InsufficientDataError as exc:
            log.warning("%s segmentation skipped: %s", name, exc)
    race, excluded = majority_race_segments(profiles)
    if race:
        schemes.append(("race", race, "White"))

    value_keys = ["sampling"] + [c.label for c in criteria]
    header = (["scheme", "segment", "n_zones", "total_population", "n_users", "n_days", "sampling_rate_pct"]
              + [f"qualified_rate_pct_{c.label}" for c in criteria]
              + [f"{stat}_{k}" for k in value_keys for stat in ("u", "p")])
    rows = []
    for name, labels, base in schemes:
        groups: dict[str, list[str]] = {}
        for zid, lab in labels.items():
            groups.setdefault(lab, []).append(zid)
        zone_rates = per_zone_rates(labels, homes, day_metrics, by_id, criteria)
        compare = len(groups) > 1 and base in groups
        for lab in sorted(groups):
            s = group_summary(groups[lab], homes, day_metrics, by_id, criteria, lab)
            sig = []
            for key in value_keys:
                if compare and lab != base:
                    a = [zone_rates[z][key] for z in groups[base] if key in zone_rates[z]]
                    b = [zone_rates[z][key] for z in groups[lab] if key in zone_rates[z]]
                    if a and b:
                        u, _z, p = compare_groups(a, b)
                        sig += [lio._fmt(float(u)), lio._fmt(float(p))]
                        continue
                sig += ["", ""]
            rows.append([name, lab, s.n_zones, s.total_population, s.n_users, s.n_days,
                         lio._fmt(s.sampling_rate_pct)]
                        + [lio._fmt(s.qualified_rate_pct[c.label]) for c in criteria] + sig)
    with open(out / "segments.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(map(str, r)) + "\n")
    return rows


def cmd_bias(cfg, out: Path, corpus=None, threads: int = 1):
    corpus = corpus if corpus is not None else _corpus(cfg, out, allow_synth=False)
    params = _stay_params(cfg)
    days = select_ground_truth_days(corpus, _selection(cfg))
    if not days:
        raise CommandError("no ground-truth day passes the selection criterion", EXIT_EMPTY_SELECTION)
    lio.write_stays(out / "stays.csv", ((d.user_id, d.day_id, detect_stays(d, params)) for d in days))
    records = run_bias_experiment(days, cfg["rates"], cfg["reps"], cfg["master_seed"], params, threads)
    lio.write_bias_table(out / "bias.csv", records)
    log.info("%d ground-truth days, %d bias records", len(days), len(records))
    return records


def cmd_regress(cfg, out: Path, records=None):
    if records is None:
        path = cfg["bias_table"] or out / "bias.csv"
        if not Path(path).exists():
            raise CommandError(f"bias table {path} not found", EXIT_CONFIG)
        records = lio.read_bias_table(path)
    report = {"models": {}}
    csv_rows = []
    try:
        for model_id in cfg["models"]:
            res = fit_bias_model(records, MODELS[model_id], cfg["correction"])
            high = {k: v for k, v in res.vif.items() if v > cfg["vif_warn"]}
            if high:
                log.warning("%s: high variance inflation %s", model_id, sorted(high))
            report["models"][model_id] = {
                "terms": res.table(),
                "r_squared": res.r_squared,
                "n": res.n,
                "n_clusters": res.n_clusters,
                "dropped_rows": res.dropped_rows,
                "correction": res.correction,
                "vif": res.vif,
                "vif_warnings": sorted(high),
            }
            for row in res.table():
                csv_rows.append([model_id] + [row["term"]] + [lio._fmt(row[k]) for k in ("coefficient", "clustered_se", "t", "p")])
            for key in ("r_squared", "n", "n_clusters", "dropped_rows", "correction"):
                val = getattr(res, key)
                csv_rows.append([model_id, key, lio._fmt(float(val)) if key == "r_squared" else str(val), "", "", ""])
    except (RankError, ClusterError, np.linalg.LinAlgError, ValueError) as exc:
        raise CommandError(f"regression failed: {exc}", EXIT_NUMERIC) from None
    with open(out / "regression.csv", "w") as fh:
        fh.write("model,term,coefficient,clustered_se,t,p\n")
        for r in csv_rows:
            fh.write(",".join(r) + "\n")
    (out / "regression.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


DATA_ARTIFACTS = ("pings.csv", "truth.csv", "quality.csv", "qualify.csv", "qualify_summary.json",
                  "stays.csv", "bias.csv", "regression.csv", "regression.json",
                  "zone_profiles.csv", "zone_lookup.csv", "segments.csv")


def cmd_pipeline(cfg, out: Path, threads: int = 1):
    stage = "ingest"
    try:
        corpus = _corpus(cfg, out)
        stage = "quality"
        cmd_quality(cfg, out, corpus)
        stage = "qualify"
        summary = cmd_qualify(cfg, out, corpus)
        if cfg["zone_profiles"] or (cfg["zones"] and not cfg["input"]):
            stage = "segment"
            seg_cfg = dict(cfg)
            if not cfg["zone_profiles"]:
                seg_cfg.update(zone_profiles=str(out / "zone_profiles.csv"), zone_lookup=str(out / "zone_lookup.csv"))
            cmd_segment(seg_cfg, out, corpus)
        stage = "bias"
        records = cmd_bias(cfg, out, corpus, threads)
        stage = "regress"
        cmd_regress(cfg, out, records)
    except CommandError as exc:
        raise CommandError(f"stage {stage}: {exc}", exc.code) from None
    manifest = {
        "command": "pipeline",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg,
        "seeds": {"master_seed": cfg["master_seed"]},
        "qualification": summary,
        "artifacts": {name: _sha256(out / name) for name in DATA_ARTIFACTS if (out / name).exists()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbsbias", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["synth", "quality", "qualify", "segment", "bias", "regress", "pipeline"])
    parser.add_argument("--config", help="JSON config file (a pipeline manifest also works)")
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--input", nargs="+", help="ping files (override config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"master_seed": args.seed, "input": args.input})
        out = lio.ensure_dir(args.out_dir)
        if args.command == "synth":
            cmd_synth(cfg, out)
        elif args.command == "quality":
            cmd_quality(cfg, out)
        elif args.command == "qualify":
            cmd_qualify(cfg, out)
        elif args.command == "segment":
            cmd_segment(cfg, out)
        elif args.command == "bias":
            cmd_bias(cfg, out, threads=args.threads)
        elif args.command == "regress":
            cmd_regress(cfg, out)
        else:
            cmd_pipeline(cfg, out, args.threads)
    except CommandError as exc:
        log.error("%s", exc)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
