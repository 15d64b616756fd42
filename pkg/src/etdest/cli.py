"""Command-line front end.

Subcommands::

    etdest run <config>         one run, CSV trace out
    etdest montecarlo <config>  full ensemble, aggregate CSV out
    etdest check <config>       graph / excitation / schedule screening
    etdest compare <config...>  main algorithm vs configured baselines
    etdest fit <csv>            decay-exponent fit on a CSV column

Configs are JSON files; a bare name like ``example1`` resolves to the
bundled config of that name. Exit codes: 0 success, 1 usage or
validation problem, 2 numerical divergence. ``ETDEST_OUT_DIR`` sets the
default output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .analysis import AnalysisError, fit_decay, gramian_check
from .config import ConfigError, ExperimentConfig
from .estimator import DivergenceError
from .graph import GenerationError
from .harness import (
    compare_experiment,
    run_experiment,
    write_aggregate_csv,
    write_estimates_csv,
    write_events_csv,
    write_final_estimates_csv,
)
from .sensing import ScheduleError, check_assumption1, check_assumption2

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2


class CliError(Exception):
    """Bad invocation or unusable input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which this tool reserves
    # for numerical divergence; route usage problems through CliError.
    def error(self, message):
        raise CliError(message)


def _resolve_config(name: str) -> ExperimentConfig:
    path = Path(name)
    if path.exists():
        return ExperimentConfig.from_file(path)
    fname = name if name.endswith(".json") else f"{name}.json"
    ref = resources.files("etdest").joinpath("configs").joinpath(fname)
    if ref.is_file():
        return ExperimentConfig.from_dict(json.loads(ref.read_text()))
    raise CliError(f"config {name!r}: no such file or bundled config")


def _out_dir(args) -> Path:
    if args.out_dir is not None:
        return Path(args.out_dir)
    return Path(os.environ.get("ETDEST_OUT_DIR", "."))


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ----- subcommands ---------------------------------------------------------


def _cmd_run(args) -> int:
    config = _resolve_config(args.config)
    single = dict(config.to_dict())
    single["runs"] = 1
    if args.snapshot_every is not None:
        single["snapshot_every"] = args.snapshot_every
    config = ExperimentConfig.from_dict(single)

    result = run_experiment(
        config, seed=args.seed, workers=1, keep_traces=True
    )
    trace = result.traces[0]
    out = _out_dir(args)
    stem = f"{config.name}-{result.algorithm}"
    paths = [
        write_aggregate_csv(result, out / f"{stem}-aggregate.csv"),
        write_events_csv(trace, out / f"{stem}-events.csv"),
    ]
    if trace.snapshots and config.snapshot_every > 0:
        paths.append(write_estimates_csv(trace, out / f"{stem}-estimates.csv"))
    for p in paths:
        _say(args, f"wrote {p}")
    _say(
        args,
        f"final mse {result.mse[-1]:.6g}, rate {result.mean_rate[-1]:.6g}, "
        f"messages {result.summaries[0].messages}",
    )
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    config = _resolve_config(args.config)
    result = run_experiment(config, seed=args.seed, workers=args.workers)
    out = _out_dir(args)
    stem = f"{config.name}-{result.algorithm}"
    paths = [
        write_aggregate_csv(result, out / f"{stem}-aggregate.csv"),
        write_final_estimates_csv(result, out / f"{stem}-final-estimates.csv"),
    ]
    for p in paths:
        _say(args, f"wrote {p}")
    _say(
        args,
        f"{result.runs} runs, horizon {result.horizon}: "
        f"final mse {result.mse[-1]:.6g}, final rate {result.mean_rate[-1]:.6g}",
    )
    return EXIT_OK


def _cmd_check(args) -> int:
    config = _resolve_config(args.config)
    graph = config.build_graph()
    model = config.build_model()
    failed = False

    print(f"network: {graph.n} sensors, {graph.edge_count()} links")
    report = gramian_check(
        graph, model, window_length=args.window_length, windows=args.windows
    )
    for line in report.lines():
        print(line)
    failed |= not report.network_positive

    try:
        schedules = config.build_schedules()
    except (ConfigError, ScheduleError) as exc:
        print(f"schedules: invalid ({exc})")
        return EXIT_USAGE

    print("step/threshold conditions:")
    rep1 = check_assumption1(schedules)
    for line in rep1.lines():
        print(f"  {line}")
    failed |= rep1.passed is False

    try:
        rep2 = check_assumption2(schedules)
    except ScheduleError as exc:
        print(f"trigger-scaling conditions: skipped ({exc})")
    else:
        print("trigger-scaling conditions:")
        for line in rep2.lines():
            print(f"  {line}")
        failed |= rep2.passed is False

    return EXIT_USAGE if failed else EXIT_OK


def _cmd_compare(args) -> int:
    rows = []
    out = _out_dir(args)
    for name in args.configs:
        config = _resolve_config(name)
        for result in compare_experiment(config, seed=args.seed, workers=args.workers):
            rows.append(
                (
                    config.name,
                    result.algorithm,
                    result.mse[-1],
                    result.mean_rate[-1],
                    float(sum(s.messages for s in result.summaries)) / result.runs,
                )
            )
            if args.out_dir is not None:
                write_aggregate_csv(
                    result, out / f"{config.name}-{result.algorithm}-aggregate.csv"
                )
    width = max(len(r[1]) for r in rows)
    name_w = max(len(r[0]) for r in rows)
    print(f"{'config':<{name_w}}  {'algorithm':<{width}}  {'final_mse':>12}  {'final_rate':>10}  {'avg_messages':>12}")
    for cfg_name, label, final_mse, rate, msgs in rows:
        print(f"{cfg_name:<{name_w}}  {label:<{width}}  {final_mse:>12.6g}  {rate:>10.6g}  {msgs:>12.1f}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        t0, t1 = (int(part) for part in args.window.split(","))
    except ValueError as exc:
        raise CliError(f"--window expects 'start,end', got {args.window!r}") from exc
    path = Path(args.csv)
    if not path.exists():
        raise CliError(f"{path}: no such file")
    ts, values = [], []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or args.col not in reader.fieldnames:
            raise CliError(f"{path}: no column named {args.col!r}")
        t_col = "t" if reader.fieldnames and "t" in reader.fieldnames else None
        for k, row in enumerate(reader):
            ts.append(float(row[t_col]) if t_col else float(k))
            values.append(float(row[args.col]))
    fit = fit_decay(values, (t0, t1), ts=ts)
    print(
        f"{args.col} ~ t^{fit.exponent:.4f} over [{fit.t_start}, {fit.t_end}] "
        f"(intercept {fit.intercept:.4f}, residual rms {fit.residual_rms:.4f})"
    )
    return EXIT_OK


# ----- entry point ---------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="etdest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    common.add_argument("--out-dir", default=None, help="output directory (default: $ETDEST_OUT_DIR or .)")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common.add_argument("--quiet", action="store_true", help="suppress progress chatter")

    p_run = sub.add_parser("run", parents=[common], help="single run, CSV trace out")
    p_run.add_argument("config")
    p_run.add_argument("--snapshot-every", type=int, default=None, help="record estimates every k rounds")
    p_run.set_defaults(func=_cmd_run)

    p_mc = sub.add_parser("montecarlo", parents=[common], help="full ensemble, aggregate CSV out")
    p_mc.add_argument("config")
    p_mc.set_defaults(func=_cmd_montecarlo)

    p_check = sub.add_parser("check", parents=[common], help="screen graph, excitation, and schedules")
    p_check.add_argument("config")
    p_check.add_argument("--window-length", type=int, default=1, help="excitation window length")
    p_check.add_argument("--windows", type=int, default=1, help="number of windows to screen")
    p_check.set_defaults(func=_cmd_check)

    p_cmp = sub.add_parser("compare", parents=[common], help="main algorithm vs configured baselines")
    p_cmp.add_argument("configs", nargs="+")
    p_cmp.set_defaults(func=_cmd_compare)

    p_fit = sub.add_parser("fit", parents=[common], help="decay-exponent fit on a CSV column")
    p_fit.add_argument("csv")
    p_fit.add_argument("--col", required=True, help="column to fit")
    p_fit.add_argument("--window", required=True, help="time window 'start,end'")
    p_fit.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.workers < 1:
            raise CliError("--workers must be >= 1")
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, GenerationError, OSError) as exc:
        # config/schedule/graph/baseline errors all derive from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
