"""Command-line entry point: ``metric-bayes {run,simulate,report}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ALL_METHODS, ConfigError, build_run_config, load_config_values
from .harness import derived_rng, read_report, run_monte_carlo, summary_table, write_report
from .simulator import simulate_ground_truth, write_ground_truth


def _load(args):
    values = load_config_values(args.config)
    if getattr(args, "runs", None) is not None:
        values["n_runs"] = str(args.runs)
    if getattr(args, "seed", None) is not None:
        values["master_seed"] = str(args.seed)
    if getattr(args, "methods", None):
        values["methods"] = args.methods
    if getattr(args, "out", None):
        values["output"] = args.out
    if getattr(args, "workers", None) is not None:
        values["workers"] = str(args.workers)
    return values, build_run_config(values)


def cmd_run(args) -> int:
    values, cfg = _load(args)
    report = run_monte_carlo(cfg, values, record_time=args.record_time)
    write_report(report, cfg.output)
    print(summary_table(report))
    print(f"\nwrote {cfg.output}")
    if report.metadata.get("n_failed"):
        print(f"{report.metadata['n_failed']} of {cfg.n_runs} runs failed and were excluded",
              file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    values, cfg = _load(args)
    rng = derived_rng(cfg.master_seed, 0)
    gt = simulate_ground_truth(cfg.scenario, rng)
    write_ground_truth(gt, args.out)
    print(f"wrote {len(gt.scans)} scans to {args.out}")
    return 0


def cmd_report(args) -> int:
    report = read_report(args.infile)
    print(summary_table(report))
    meta = report.metadata
    if "master_seed" in meta:
        print(f"\nseed {meta['master_seed']}, {meta.get('n_runs')} runs, "
              f"{meta.get('n_failed', 0)} failed, SCR statistic {meta.get('scr', float('nan')):.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metric-bayes",
                                description="DP-clustering tracker benchmark against NN, PDA and naive Bayes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="Monte Carlo benchmark, writes a CSV report and JSON sidecar")
    r.add_argument("--config", required=True, help="config file, or 'paper_scenario'")
    r.add_argument("--runs", type=int, help="override n_runs")
    r.add_argument("--seed", type=int, help="override master_seed")
    r.add_argument("--methods", help=f"comma-separated subset of {','.join(ALL_METHODS)}")
    r.add_argument("--out", help="CSV path (sidecar goes next to it with .json)")
    r.add_argument("--workers", type=int, help="worker processes")
    r.add_argument("--record-time", action="store_true",
                   help="store wall time in the sidecar (makes it run-dependent)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="dump one ground-truth trajectory with scans")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    q = sub.add_parser("report", help="print a summary table of a CSV report")
    q.add_argument("--in", dest="infile", required=True)
    q.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"metric-bayes: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
