"""Command-line entry point.

::

    relaybf run experiment.conf --out results.csv
    relaybf fig2 --samples 200 --seed 7 --out fig2.csv
    relaybf fig3 --samples 200 --threads 4 --out fig3.csv --per-sample fig3_samples.csv
    relaybf validate

Campaign CSVs have one row per sweep point. ``--out X.csv`` also writes
``X.csv.meta.json`` with the full configuration and run diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config, serialize_config
from .sim import CampaignSummary, ExperimentConfig, preset_fig2, preset_fig3, run_campaign

CAMPAIGN_COLUMNS = (
    "sweep_var",
    "sweep_value",
    "alpha",
    "p_bs_dbm",
    "p_rn_dbm",
    "mean_capacity_bps",
    "stderr_bps",
    "mean_groups_esga",
    "mean_groups_ocga",
    "norm_opt_gap",
    "samples_ok",
    "samples_aborted",
)
SAMPLE_COLUMNS = ("sample_index", "seed", "capacity_bps", "groups_esga", "groups_ocga")


def fmt(x) -> str:
    """Plain decimal text; empty for nan."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return np.format_float_positional(x, unique=True, trim="-")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def campaign_csv(summary: CampaignSummary) -> str:
    rows = []
    for s in summary.points:
        p = s.point
        rows.append(
            (
                p.var,
                p.value,
                p.alpha,
                p.p_bs_dbm,
                p.p_rn_dbm,
                s.mean_capacity,
                s.stderr,
                s.mean_groups_esga,
                s.mean_groups_ocga,
                s.norm_opt_gap,
                s.samples_ok,
                s.samples_aborted,
            )
        )
    return _csv_text(CAMPAIGN_COLUMNS, rows)


def sample_csv(summary: CampaignSummary, point_index: int) -> str:
    rows = []
    for s in summary.samples:
        r = s.points[point_index]
        rows.append((s.index, s.seed, r.capacity, r.groups_esga, r.groups_ocga))
    return _csv_text(SAMPLE_COLUMNS, rows)


def per_sample_paths(base: Path, summary: CampaignSummary) -> list:
    """One file per sweep point; with several points the point is added to the stem."""
    points = [s.point for s in summary.points]
    if len(points) == 1:
        return [base]
    return [base.with_name(f"{base.stem}_{p.var}_{fmt(p.value)}{base.suffix}") for p in points]


def metadata_json(summary: CampaignSummary) -> str:
    meta = dict(summary.metadata)
    meta["config"] = serialize_config(summary.config).splitlines()
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaybf", description="Relay-assisted MU-MIMO grouping simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def campaign_flags(p):
        p.add_argument("--samples", type=int, help="override sim.num_samples")
        p.add_argument("--seed", type=int, help="override sim.seed")
        p.add_argument("--out", type=Path, help="campaign CSV path (default: stdout)")
        p.add_argument("--per-sample", type=Path, help="also write per-sample CSV(s)")
        p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")

    run = sub.add_parser("run", help="run the campaign described by a config file")
    run.add_argument("config", type=Path)
    campaign_flags(run)
    campaign_flags(sub.add_parser("fig2", help="OCGA vs ESGA over alpha"))
    campaign_flags(sub.add_parser("fig3", help="capacity over BS and relay power"))
    val = sub.add_parser("validate", help="run the built-in property checks")
    val.add_argument("--seed", type=int, default=0)
    return parser


def _fail(message: str) -> int:
    print(f"relaybf: error: {message}", file=sys.stderr)
    return 2


def _load(args) -> ExperimentConfig:
    if args.command == "fig2":
        return preset_fig2()
    if args.command == "fig3":
        return preset_fig3()
    return parse_config(args.config.read_text())


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        from .validation import run_validation

        results = run_validation(args.seed)
        return 0 if all(r.ok for r in results) else 1

    try:
        config = _load(args)
    except OSError as exc:
        return _fail(f"cannot read {args.config}: {exc.strerror}")
    except ConfigError as exc:
        return _fail(f"{args.config}: {exc}")
    if args.samples is not None and args.samples < 1:
        return _fail("--samples must be positive")
    if args.seed is not None and args.seed < 0:
        return _fail("--seed must be nonnegative")
    if args.threads < 1:
        return _fail("--threads must be positive")
    config = config.with_overrides(num_samples=args.samples, seed=args.seed)

    summary = run_campaign(config, threads=args.threads)
    text = campaign_csv(summary)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
        Path(f"{args.out}.meta.json").write_text(metadata_json(summary))
        print(f"wrote {args.out}", file=sys.stderr)
    if args.per_sample is not None:
        for j, path in enumerate(per_sample_paths(args.per_sample, summary)):
            path.write_text(sample_csv(summary, j))
            print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
