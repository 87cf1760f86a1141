"""Command-line interface.

Subcommands:
  validate   check a manifest and feature files for format and alignment
  join       concatenate feature files column-wise (optional normalization)
  select     run a selection method under a duration budget
  evaluate   compute subset metrics for an index list or a selection report

Every command is deterministic given its flags and input files; stochastic
methods require an explicit --seed. Diagnostics go to stderr, data to files
or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import report as report_mod
from .features import (
    FeatureFileError,
    concat_features,
    load_features,
    normalize_rows,
    write_features,
)
from .manifest import ManifestError, load_manifest
from .selectors import METHODS, OverflowPolicy, SelectionBudget, run_selection

_METHOD_FLAGS = {name.replace("_", "-"): name for name in METHODS}
_POLICY_FLAGS = {p.value.replace("_", "-"): p for p in OverflowPolicy}


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def cmd_validate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    parts = []
    for path in args.features:
        matrix = load_features(path)
        if matrix.rows != len(manifest.records):
            return _fail(
                f"{path}: {matrix.rows} feature rows but manifest has "
                f"{len(manifest.records)} records"
            )
        parts.append(f"{path}: {matrix.rows}x{matrix.dim}")
    summary = (
        f"ok: {len(manifest.records)} records, "
        f"{manifest.total_duration_sec:.3f} s total"
    )
    if parts:
        summary += "; " + "; ".join(parts)
    print(summary)
    return 0


def cmd_join(args: argparse.Namespace) -> int:
    parts = [load_features(p) for p in args.parts]
    if args.normalize_parts:
        parts = [normalize_rows(p) for p in parts]
    joined = concat_features(parts)
    if args.normalize_output:
        joined = normalize_rows(joined)
    write_features(joined, args.out)
    print(f"wrote {args.out}: {joined.rows}x{joined.dim}")
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    method = _METHOD_FLAGS[args.method]
    spec = METHODS[method]
    if args.seed is None:
        if spec.stochastic:
            return _fail(f"--seed is required for method {args.method!r}")
        args.seed = 0
    if args.t_max_seconds is not None:
        t_max = args.t_max_seconds
    else:
        t_max = args.t_max_hours * 3600.0

    manifest = load_manifest(args.manifest)
    features = None
    if spec.needs_features:
        if args.features is None:
            return _fail(f"method {args.method!r} requires --features")
        features = load_features(args.features)
    elif args.features is not None:
        features = load_features(args.features)  # used for reported metrics only

    budget = SelectionBudget(t_max_sec=t_max, overflow_policy=_POLICY_FLAGS[args.overflow_policy])
    result = run_selection(
        method, manifest, budget, args.seed, features=features, threads=args.threads
    )
    metrics = report_mod.evaluate_subset(manifest, features, result.indices)
    report_mod.write_document(report_mod.result_document(result, manifest, metrics), args.out)

    if not result.indices:
        print("warning: empty selection (budget below every candidate)", file=sys.stderr)
    objective = result.per_step[-1].objective if result.per_step else 0.0
    print(
        f"{result.method}: n_selected={len(result.indices)} "
        f"total_duration_sec={metrics.total_duration_sec!r} objective={objective!r}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    features = load_features(args.features) if args.features is not None else None
    if args.indices_file is not None:
        indices = report_mod.read_indices_file(args.indices_file)
    else:
        indices = report_mod.read_result_indices(args.result_file, manifest)
    metrics = report_mod.evaluate_subset(manifest, features, indices)
    doc = report_mod.metrics_document(metrics)
    if args.out is not None:
        report_mod.write_document(doc, args.out)
    else:
        print(json.dumps(doc, indent=2))
    if args.table is not None:
        table = report_mod.ComparisonTable(rows=(("subset", metrics),))
        Path(args.table).write_text(table.to_csv(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coresel",
        description="Budget-constrained diverse subset selection for dataset manifests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check manifest/feature files and their alignment")
    p.add_argument("manifest", type=Path)
    p.add_argument("features", type=Path, nargs="*")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("join", help="concatenate feature files column-wise")
    p.add_argument("parts", type=Path, nargs="+")
    p.add_argument("--normalize-parts", action="store_true",
                   help="scale each part's rows to unit norm before joining")
    p.add_argument("--normalize-output", action="store_true",
                   help="scale the joined rows to unit norm (off by default)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("select", help="run a selection method under a duration budget")
    p.add_argument("--method", choices=sorted(_METHOD_FLAGS), required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--features", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--t-max-seconds", type=float)
    group.add_argument("--t-max-hours", type=float)
    p.add_argument("--seed", type=int, help="required for stochastic methods")
    p.add_argument("--overflow-policy", choices=sorted(_POLICY_FLAGS),
                   default="stop-on-first-overflow")
    p.add_argument("--threads", type=int, default=1,
                   help="workers for the candidate scan; never affects output")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="compute subset metrics")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--features", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--indices-file", type=Path,
                       help="text file with one record index per line")
    group.add_argument("--result-file", type=Path,
                       help="selection report written by `coresel select`")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--table", type=Path, help="also write a one-row CSV table")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, FeatureFileError, ValueError, IndexError, OSError) as exc:
        return _fail(f"{exc.__class__.__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
