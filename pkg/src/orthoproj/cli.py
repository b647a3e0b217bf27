"""Command-line surface: run, verify, sweep, compare.

Exit codes are stable: 0 success, 1 verification failure, 2 config error,
3 numeric failure mid-run. Every output file is written atomically (temp
file + rename) so an interrupted run never leaves a truncated CSV behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import ConfigParseError, ExperimentFile, parse_config_file, render_config
from .errors import ConfigurationError, NumericError
from .metrics import alignment_tax, records_to_csv, summarize, tax_report_to_csv
from .optimizer import NO_REFRESH, Stage, train
from .plots import line_chart, scatter_chart
from .tasks import build_family

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3

SWEEP_AXES = ("K", "M", "refsize")


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _curves_svg(result, family) -> str:
    steps = [r.step for r in result.records]
    series = {"safety": [r.safety_loss for r in result.records]}
    for i, task in enumerate(family.capability_tasks):
        series[task.name] = [r.ref_losses[i] for r in result.records]
    return line_chart(steps, series, "probe losses over training", "step", "loss")


def run_experiment(experiment: ExperimentFile, out_dir: Path):
    """Build the family, train, and write the four run artifacts."""
    family = build_family(experiment.family_kind, experiment.family_seed,
                          **experiment.family_params_dict())
    result = train(experiment.train, family)
    report = alignment_tax(result, family)
    atomic_write_text(out_dir / "records.csv", records_to_csv(result.records))
    atomic_write_text(out_dir / "tax.csv", tax_report_to_csv(report))
    atomic_write_text(out_dir / "config_resolved.cfg", render_config(experiment))
    atomic_write_text(out_dir / "curves.svg", _curves_svg(result, family))
    return result, report, family


def cmd_run(args) -> int:
    try:
        experiment = _load(args)
    except (ConfigParseError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        _, report, _ = run_experiment(experiment, Path(args.out or experiment.out_dir))
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"safety_gain={report.safety_gain!r} total_tax={report.total_tax!r}")
    return EXIT_OK


def _load(args) -> ExperimentFile:
    experiment = parse_config_file(args.config)
    if args.seed is not None:
        train_cfg = dataclasses.replace(experiment.train, seed=args.seed)
        family_seed = experiment.family_seed
        if family_seed == experiment.train.seed:  # family seed was defaulted
            family_seed = args.seed
        experiment = dataclasses.replace(experiment, train=train_cfg, family_seed=family_seed)
    return experiment


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(seed=args.seed if args.seed is not None else 0,
                      inject_skip_projection=args.inject_skip_projection)
    failures = [r for r in results if not r.passed]
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} ({r.elapsed:.2f}s): {r.details}")
    total = sum(r.elapsed for r in results)
    print(f"{len(results) - len(failures)}/{len(results)} checks passed in {total:.1f}s")
    return EXIT_OK if not failures else EXIT_VERIFY_FAILED


def _sweep_configs(experiment: ExperimentFile, axis: str, values):
    """One resolved experiment per axis value; bad values become failed legs."""
    legs = []
    for value in values:
        t = experiment.train
        try:
            if axis == "K":
                period = NO_REFRESH if value == "inf" else int(value)
                stages = tuple(Stage(s.task, s.loss, s.steps, period) for s in t.stages)
                t = dataclasses.replace(t, refresh_every=period, stages=stages)
            elif axis == "M":
                t = dataclasses.replace(t, ref_count=int(value))
            else:  # refsize
                t = dataclasses.replace(t, ref_batch=int(value))
        except ValueError as exc:
            legs.append((str(value), ConfigurationError(f"axis value {value!r}: {exc}")))
            continue
        legs.append((str(value), dataclasses.replace(experiment, train=t)))
    return legs


def _leg_summary_row(value, result, report):
    n = len(result.records)
    mean_removed = sum(r.removed_fraction for r in result.records) / n
    mean_rank = sum(r.rank for r in result.records) / n
    return (value, report.safety_gain, *report.tax, report.total_tax, mean_removed, mean_rank)


def cmd_sweep(args) -> int:
    try:
        experiment = _load(args)
    except (ConfigParseError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.axis not in SWEEP_AXES:
        print(f"config error: unknown sweep axis {args.axis!r}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        print("config error: --values is empty", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    out_root = Path(args.out or experiment.out_dir)
    rows, failures = [], []
    ref_names = None
    for value, leg in _sweep_configs(experiment, args.axis, values):
        leg_dir = out_root / f"{args.axis}={value}"
        try:
            if isinstance(leg, ConfigurationError):
                raise leg
            result, report, family = run_experiment(leg, leg_dir)
        except (ConfigurationError, NumericError) as exc:
            failures.append({"value": value, "error": str(exc),
                             "kind": type(exc).__name__})
            continue
        ref_names = [t.name for t in family.capability_tasks]
        rows.append(_leg_summary_row(value, result, report))

    if rows:
        columns = (args.axis, "safety_gain", *[f"tax_{n}" for n in ref_names],
                   "total_tax", "mean_removed_fraction", "mean_rank")
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(v if isinstance(v, str) else repr(v) for v in row))
        atomic_write_text(out_root / "summary.csv", "\n".join(lines) + "\n")
        chart = line_chart([r[0] for r in rows],
                           {"total_tax": [r[-3] for r in rows],
                            "safety_gain": [r[1] for r in rows]},
                           f"sweep over {args.axis}", args.axis, "value",
                           categorical=True)
        atomic_write_text(out_root / "sweep.svg", chart)
    if failures:
        atomic_write_text(out_root / "failures.json", json.dumps(failures, indent=2) + "\n")
        print(f"{len(failures)} sweep leg(s) failed; see failures.json", file=sys.stderr)
        numeric = any(f["kind"] == "NumericError" for f in failures)
        return EXIT_NUMERIC_ERROR if numeric else EXIT_CONFIG_ERROR
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        experiment = _load(args)
    except (ConfigParseError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_root = Path(args.out or experiment.out_dir)
    family = build_family(experiment.family_kind, experiment.family_seed,
                          **experiment.family_params_dict())
    results = []
    try:
        for method in ("naive", "ortho", "replay"):
            cfg = dataclasses.replace(experiment.train, method=method)
            result = train(cfg, family)
            results.append(result)
            atomic_write_text(out_root / method / "records.csv",
                              records_to_csv(result.records))
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    table = summarize(results, family)
    atomic_write_text(out_root / "summary.csv", table.to_csv())
    points = []
    for result in results:
        report = alignment_tax(result, family)
        points.append((report.safety_gain, report.total_tax, result.config.method))
    atomic_write_text(out_root / "compare.svg",
                      scatter_chart(points, "safety gain vs capability tax",
                                    "safety_gain", "total_tax"))
    print(table.to_csv(), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orthoproj",
        description="Train with orthogonal gradient projection against an estimated "
                    "capability subspace, and verify its geometric contracts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_verify = sub.add_parser("verify", help="run the full property-check suite")
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--inject-skip-projection", action="store_true",
                          help="test-only fault injection: checks must fail")
    p_verify.set_defaults(fn=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="run one experiment per axis value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values, e.g. '2,5,10,inf'")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="run naive, ortho, replay on one family")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(fn=cmd_compare)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
