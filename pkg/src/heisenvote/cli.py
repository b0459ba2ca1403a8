"""Command-line front end: ``heisenvote <command> ...``.

Exit codes: 0 success, 1 data error, 2 usage error. Failures print one
line ``error: <stage>: <message>`` to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .curve import dumps_weights, load_weights
from .pinch import detect_onset, detect_pinch_start, read_kinematic_csv
from .pipeline import OUTPUT_DIR_ENV, PipelineError, RunConfig, pipeline_run, write_tables
from .report import (EvaluationError, aggregate, default_split, evaluate_strategies,
                     fit_weights, train_test_split)
from .sim import default_models, generate_dataset, load_calibration
from .trace import (TECHNIQUES, Dataset, TraceParseError, atomic_write_text, load_jsonl,
                    save_jsonl, validate)

STRATEGY_CHOICES = ("origin", "shift", "vote", "wvote", "awvote", "all")
NEEDS_CURVE = {"shift", "wvote", "awvote"}


class CommandError(Exception):
    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(message)


def _default_jobs() -> int:
    return os.cpu_count() or 1


def _build_parser():
    parser = argparse.ArgumentParser(prog="heisenvote", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    cmds = {}

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", help="JSON file of default flag values")
        cmds[name] = p
        return p

    p = add("synth", help="generate synthetic selection traces")
    p.add_argument("--technique", nargs="+", choices=TECHNIQUES, default=list(TECHNIQUES))
    p.add_argument("--width", nargs="+", type=float, default=None)
    p.add_argument("--spacing", nargs="+", type=float, default=None)
    p.add_argument("--participants", type=int, default=24)
    p.add_argument("--events", type=int, default=162, help="events per participant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibration", help="perturbation/simulation calibration JSON")
    p.add_argument("--record-scores", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True)

    p = add("fit", help="fit per-technique accuracy curves and voting weights")
    p.add_argument("traces")
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--q", type=float, default=2.0 / 3.0)
    p.add_argument("--participants", nargs="+", help="restrict fitting to these participants")
    p.add_argument("--out", required=True)

    p = add("evaluate", help="error rates of resolution strategies")
    p.add_argument("traces", help="test traces")
    p.add_argument("--strategy", action="append", choices=STRATEGY_CHOICES)
    p.add_argument("--weights", help="curve JSON written by `fit`")
    p.add_argument("--train", help="training traces to fit curves on")
    p.add_argument("--w-user", type=float, default=0.4)
    p.add_argument("--out", help="CSV output (stdout if omitted)")

    p = add("report", help="Heisenberg-error, shift-direction and metric tables")
    p.add_argument("traces")
    p.add_argument("--out-dir", default=None)

    p = add("validate", help="check traces against the schema invariants")
    p.add_argument("traces")

    p = add("detect-pinch", help="pinch onset/start from a kinematic CSV")
    p.add_argument("csv")
    p.add_argument("--vti-threshold", type=float, default=0.05)
    p.add_argument("--rot-threshold", type=float, default=0.1)

    p = add("run", help="synth -> split -> fit -> evaluate -> report")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--technique", nargs="+", choices=TECHNIQUES, default=list(TECHNIQUES))
    p.add_argument("--participants", type=int, default=24)
    p.add_argument("--events", type=int, default=162)
    p.add_argument("--test-participants", type=int, default=None)
    p.add_argument("--calibration")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    return parser, cmds


def _apply_config(argv, parser, cmds):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in cmds), None)
    if known.config and command:
        try:
            with open(known.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {known.config}: {exc}")
        if not isinstance(defaults, dict):
            parser.error("config file must hold a JSON object")
        cmds[command].set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})


def _load(path, stage="load"):
    try:
        return load_jsonl(path)
    except (OSError, TraceParseError) as exc:
        raise CommandError(stage, f"{path}: {exc}") from exc


def cmd_synth(args):
    cal = load_calibration(args.calibration)
    ds = Dataset()
    for tech in args.technique:
        overrides = dict(participants=args.participants, events_per_participant=args.events,
                         record_scores=args.record_scores)
        if args.width:
            overrides["widths"] = tuple(args.width)
        if args.spacing:
            overrides["spacings"] = tuple(args.spacing)
        sim, pert = default_models(tech, cal, **overrides)
        ds = ds + generate_dataset(sim, pert, args.seed, jobs=args.jobs)
    save_jsonl(ds, args.out)
    print(f"wrote {len(ds)} events to {args.out}")


def cmd_fit(args):
    ds = _load(args.traces)
    if args.participants:
        keep = set(args.participants)
        ds = ds.filter(lambda e: str(e.participant) in keep)
    try:
        weights = fit_weights(ds, args.k, args.q)
    except EvaluationError as exc:
        raise CommandError("fit", str(exc)) from exc
    if not weights:
        raise CommandError("fit", "no events to fit")
    atomic_write_text(args.out, dumps_weights(weights))
    for tech, wf in weights.items():
        c = wf.curve
        print(f"{tech}: a={c.a:.6g} b={c.b:.6g} c={c.c:.6g} d={c.d:.6g} k={wf.k:g} A={wf.A:.6g}")


def cmd_evaluate(args, parser):
    chosen = args.strategy or ["all"]
    kinds = ["origin", "shift", "vote", "wvote", "awvote"] if "all" in chosen else chosen
    if NEEDS_CURVE & set(kinds) and not (args.weights or args.train):
        parser.error(f"strategy {'/'.join(sorted(NEEDS_CURVE & set(kinds)))} requires --weights "
                     "(or --train)")
    test = _load(args.traces)
    train = _load(args.train) if args.train else None
    weights = None
    if args.weights:
        try:
            weights = load_weights(args.weights)
        except (OSError, ValueError) as exc:
            raise CommandError("load", f"{args.weights}: {exc}") from exc
    try:
        table = evaluate_strategies(train, test, kinds, weights=weights, w_user=args.w_user)
    except EvaluationError as exc:
        raise CommandError(exc.stage, str(exc)) from exc
    if args.out:
        atomic_write_text(args.out, table.to_csv())
    else:
        sys.stdout.write(table.to_csv())


def cmd_report(args):
    ds = _load(args.traces)
    out = Path(args.out_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, path in write_tables(aggregate(ds), out).items():
        print(f"{name}: {path}")


def cmd_validate(args):
    try:
        ds = load_jsonl(args.traces, check=False)
    except (OSError, TraceParseError) as exc:
        raise CommandError("validate", f"{args.traces}: {exc}") from exc
    n = 0
    for i, event in enumerate(ds, start=1):
        for diag in validate(event):
            print(f"event {i}: {diag}")
            n += 1
    print(f"{n} diagnostics")
    return 0 if n == 0 else 1


def cmd_detect_pinch(args):
    try:
        series = read_kinematic_csv(args.csv)
    except (OSError, ValueError, KeyError) as exc:
        raise CommandError("detect-pinch", f"{args.csv}: {exc}") from exc
    onset = detect_onset(series, args.vti_threshold)
    start = detect_pinch_start(series, args.rot_threshold) if onset is not None else None

    def fmt(i):
        return "none none" if i is None else f"{i} {series.timestamps[i]:.6f}"

    print(f"onset {fmt(onset)}")
    print(f"pinch_start {fmt(start)}")


def cmd_run(args):
    config = RunConfig(out_dir=args.out_dir, seed=args.seed, techniques=tuple(args.technique),
                       participants=args.participants, events=args.events,
                       n_test=args.test_participants, calibration=args.calibration,
                       jobs=args.jobs)
    try:
        paths = pipeline_run(config)
    except PipelineError as exc:
        raise CommandError(exc.stage, exc.message) from exc
    for name, path in paths.items():
        print(f"{name}: {path}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, cmds = _build_parser()
    _apply_config(argv, parser, cmds)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"synth": cmd_synth, "fit": cmd_fit, "report": cmd_report,
                "validate": cmd_validate, "detect-pinch": cmd_detect_pinch, "run": cmd_run}
    try:
        if args.command == "evaluate":
            rc = cmd_evaluate(args, cmds["evaluate"])
        else:
            rc = handlers[args.command](args)
    except CommandError as exc:
        print(f"error: {exc.stage}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
