"""Command line entry point: ``cutcell-xdiff {run,stationary,longtime,convergence}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments
from .config import RunConfig, load_config
from .errors import ConfigurationError, NumericalFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutcell-xdiff",
        description="Two-phase cross-diffusion with a moving interface (cut-cell finite volumes).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "simulate and write diagnostics.csv and snapshot_<t>.csv",
        "stationary": "coexistence condition and stationary state",
        "longtime": "relative free energy and interface decay with exponential fit",
        "convergence": "space-time L1 errors under mesh refinement",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value configuration file (default: test case)")
        p.add_argument("--outdir", help="output directory (overrides the config)")
        p.add_argument("--plots", action="store_true", help="also write SVG figures")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # argparse uses exit code 2 for usage errors, matching EXIT_CONFIG
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        outdir = args.outdir or cfg.outdir
        if args.command == "run":
            res = experiments.run_experiment(cfg, outdir, plots=args.plots)
            final = res.trajectory.final
            print(f"t = {final.t:g}  X = {final.X:.10f}  steps = {len(res.trajectory) - 1}")
        elif args.command == "stationary":
            res = experiments.stationary_experiment(cfg, outdir)
            sys.stdout.write(experiments.format_stationary(res))
        elif args.command == "longtime":
            res = experiments.longtime_experiment(cfg, outdir, plots=args.plots)
            print(f"H - H_inf rate = {res.H_rate:.6g} (R^2 = {res.H_r2:.6f})")
            print(f"X_inf - X rate = {res.X_rate:.6g} (R^2 = {res.X_r2:.6f})")
        else:
            res = experiments.convergence_experiment(cfg, outdir, plots=args.plots)
            for r in res.reports:
                print(f"dx = {r.dx:.6g}  L1(c) = {r.L1_total:.6e}  L1(X) = {r.L1_time_X:.6e}")
            print(f"fitted order (concentrations) = {res.order_total:.4f}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
