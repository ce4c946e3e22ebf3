"""``mrbotsim`` command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 safety violation under
``--strict``, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import log_config, parse_config
from .engine import batch_run, run_scenario
from .errors import BatchError, MRBotError, NumericalDivergence
from .plotting import render_plots
from .safety import SlewParams, slew_series
from .telemetry import read_telemetry, write_telemetry

EXIT_OK, EXIT_USAGE, EXIT_SAFETY, EXIT_DIVERGENCE = 0, 1, 2, 3

log = logging.getLogger("mrbotsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seedless", action="store_true",
                        help="accepted for clarity; runs never use random numbers")
    common.add_argument("-v", "--verbose", action="store_true", help="log to stderr")

    parser = _Parser(prog="mrbotsim", parents=[common],
                     description="Closed-loop MRI-gradient microrobot navigation simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="run a scenario")
    p.add_argument("config")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--strict", action="store_true", help="exit 2 on any safety violation")
    p.add_argument("--tp-ms", type=float, action="append", dest="tp_ms",
                   help="position sampling interval; repeat to overlay variants")

    p = sub.add_parser("safety", parents=[common], help="re-check a telemetry CSV")
    p.add_argument("telemetry")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--rise-time-ms", type=float, default=100.0)
    p.add_argument("--isocenter-m", type=float, default=0.5)
    p.add_argument("--limit", type=float, default=20.0, help="dB/dt limit in T/s")
    p.add_argument("--out", help="write the report to this file as well")

    p = sub.add_parser("bench", parents=[common], help="time repeated runs")
    p.add_argument("config")
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("plot", parents=[common], help="render telemetry CSVs to SVG")
    p.add_argument("telemetry", nargs="+")
    p.add_argument("--label", action="append", help="series label, one per file")
    p.add_argument("--out", default="plots.svg")
    return parser


def _tp_label(tp: float) -> str:
    return f"Tp = {tp * 1e3:g} ms"


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tps = args.tp_ms or [cfg.tp * 1e3]
    variants = [replace(cfg, tp=tp * 1e-3) for tp in tps]
    for v in variants:
        v.validate()
    (out / "run.log").write_text(log_config(cfg), encoding="utf-8")

    suffix = len(variants) > 1
    results, labels = [], []
    violated = False
    for v in variants:
        tag = f"_tp{v.tp * 1e3:g}" if suffix else ""
        try:
            res = run_scenario(v)
        except NumericalDivergence as exc:
            if exc.telemetry is not None:
                write_telemetry(exc.telemetry, out / f"telemetry{tag}.csv")
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIVERGENCE
        write_telemetry(res.telemetry, out / f"telemetry{tag}.csv")
        report = [f"tp_ms: {v.tp * 1e3:g}"] + res.report_lines()
        (out / f"safety_report{tag}.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
        print(f"{_tp_label(v.tp)}: {res.terminated} after {len(res.telemetry)} steps, "
              f"slew {'pass' if res.slew is None or res.slew.passed else 'FAIL'}, "
              f"fixture violations {res.fixture_violations}")
        violated |= not res.passed
        if len(res.telemetry):
            results.append(res.telemetry)
            labels.append(_tp_label(v.tp))
    if results:
        render_plots(results, labels, path=out / "plots.svg")
    if violated and args.strict:
        return EXIT_SAFETY
    return EXIT_OK


def cmd_safety(args) -> int:
    tel = read_telemetry(args.telemetry)
    params = SlewParams(args.isocenter_m, args.rise_time_ms * 1e-3, args.limit)
    lines = [f"source: {args.telemetry}", f"records: {len(tel)}",
             f"rise_time_ms: {args.rise_time_ms:g}",
             f"isocenter_distance_m: {args.isocenter_m:g}"]
    slew_ok = True
    if len(tel) >= 2:
        report = slew_series(tel.time, tel.gradient, params)
        lines += report.as_lines()
        slew_ok = report.passed
    else:
        lines.append("slew_pass: true")
    bad_fixture = int(np.count_nonzero(~tel.fixture_ok)) if len(tel) else 0
    lines.append(f"fixture_violations: {bad_fixture}")
    ok = slew_ok and bad_fixture == 0
    lines.append(f"overall_pass: {str(ok).lower()}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if not ok and args.strict:
        return EXIT_SAFETY
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    cfg = parse_config(args.config)
    try:
        stats = batch_run(cfg, args.n)
    except BatchError as exc:
        if exc.partial is not None:
            print(exc.partial.summary())
        if isinstance(exc.__cause__, NumericalDivergence):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIVERGENCE
        raise
    print(stats.summary())
    if not stats.identical:
        print("warning: runs produced differing telemetry", file=sys.stderr)
    return EXIT_OK


def cmd_plot(args) -> int:
    labels = args.label or [Path(p).stem for p in args.telemetry]
    if len(labels) != len(args.telemetry):
        raise UsageError("give one --label per telemetry file")
    sets = [read_telemetry(p) for p in args.telemetry]
    render_plots(sets, labels, path=args.out)
    print(args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "safety": cmd_safety, "bench": cmd_bench, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (MRBotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
