"""Command-line entry point: simulate, fig4 (failure comparison), fig5 (distance sweep)."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

from .config import ConfigError, LinkModelParams, ScenarioConfig, MODES
from .experiments import run_distance_sweep, run_failure_experiment
from .metrics import RunReport, export_csv
from .simulation import Simulation


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsdivn",
        description="Segment-clustered vehicular SDN simulator with fallback recovery.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and export CSV metrics")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON file")
    p_sim.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_sim.add_argument("--mode", choices=MODES, default=None,
                       help="override scenario mode")
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.add_argument("--trace", action="store_true",
                       help="write a per-message trace.tsv")

    p_f4 = sub.add_parser("fig4", help="controller-failure comparison across modes")
    p_f4.add_argument("--scenario", required=True)
    p_f4.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p_f4.add_argument("--out", required=True)

    p_f5 = sub.add_parser("fig5", help="controller distance vs. install time sweep")
    p_f5.add_argument("--distances", required=True,
                      help="comma-separated distances in meters")
    p_f5.add_argument("--sizes", required=True,
                      help="comma-separated request sizes in bytes")
    p_f5.add_argument("--reps", type=int, default=20)
    p_f5.add_argument("--loss", type=float, default=0.0, help="per-hop loss probability")
    p_f5.add_argument("--out", required=True)
    return parser


def _cmd_simulate(args) -> int:
    cfg = ScenarioConfig.load(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides).validate()
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.tsv") if args.trace else None
    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8") as fh:
            report = Simulation(cfg, trace=fh).run()
    else:
        report = Simulation(cfg).run()
    export_csv([report], args.out)
    _print_summary(report)
    return 0


def _print_summary(report: RunReport) -> None:
    sent = report.counters.get("pkts_sent", 0)
    recv = report.counters.get("pkts_received", 0)
    pdr = recv / sent if sent else float("nan")
    print(f"mode={report.mode} seed={report.seed} sent={sent} received={recv} "
          f"pdr={pdr:.4f} installs={len(report.samples)}")


def _cmd_fig4(args) -> int:
    cfg = ScenarioConfig.load(args.scenario)
    if cfg.failure is None:
        raise ConfigError("fig4 needs a scenario with a failure spec")
    seeds = list(range(1, args.seeds + 1))
    results = run_failure_experiment(cfg, seeds)
    reports = [r for mode in MODES for r in results[mode]]
    export_csv(reports, args.out)
    for mode in MODES:
        for r in results[mode]:
            _print_summary(r)
    return 0


def _parse_list(text: str, typ):
    try:
        return [typ(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list argument {text!r}: {exc}") from exc


def _cmd_fig5(args) -> int:
    distances = _parse_list(args.distances, float)
    sizes = _parse_list(args.sizes, int)
    if not distances or not sizes:
        raise ConfigError("fig5 needs at least one distance and one size")
    if not (0 <= args.loss < 1):
        raise ConfigError("--loss must be in [0, 1)")
    link = LinkModelParams(loss_prob=args.loss)
    samples, means = run_distance_sweep(distances, sizes, reps=args.reps, link=link)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "install.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distance_m", "size_B", "elapsed_s"])
        for s in samples:
            w.writerow([f"{s.dist_m:.3f}", s.size_B, f"{s.elapsed_s:.9f}"])
    for (d, size) in sorted(means):
        print(f"distance={d:g}m size={size}B mean_install={means[(d, size)]:.6f}s")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fig4":
            return _cmd_fig4(args)
        return _cmd_fig5(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
