"""Command line front end: ``blockdrift <subcommand> [options]``.

Options given on the command line override keys read from ``--config``.
The worker count comes from the ``BLOCKDRIFT_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments as ex
from .power import delta_min_hat, estimate_power, power_curve
from .profiles import get_profile


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--block-sizes", dest="block_sizes", help="comma-separated n values")
    p.add_argument("--e0s", help="comma-separated baseline error rates")
    p.add_argument("--profiles", help="comma-separated profile names")
    p.add_argument("--alpha", type=float)
    p.add_argument("--target-power", dest="target_power", type=float)
    p.add_argument("--M0", type=int)
    p.add_argument("--M1", type=int)
    p.add_argument("--provenance", dest="threshold_provenance", choices=["monte_carlo", "asymptotic"])


def _config(args) -> ex.ExperimentConfig:
    keys = [
        "output_dir", "seed", "block_sizes", "e0s", "profiles", "alpha",
        "target_power", "M0", "M1", "threshold_provenance",
    ]
    return ex.load_config(args.config, **{k: getattr(args, k, None) for k in keys})


def _single(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--e0", type=float, required=True)
    p.add_argument("--profile", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockdrift", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="Monte Carlo thresholds for every (n, e0)")
    _common(p)

    p = sub.add_parser("power", help="power at one amplitude")
    _common(p)
    _single(p)
    p.add_argument("--delta", type=float, required=True)

    p = sub.add_parser("delta-min", help="power curve and detectability threshold for one cell")
    _common(p)
    _single(p)

    p = sub.add_parser("table", help="full sweep and delta_min.csv")
    _common(p)

    p = sub.add_parser("collapse", help="power on a common delta*sqrt(n) lattice")
    _common(p)

    p = sub.add_parser("figures", help="SVG figures from table and collapse outputs")
    _common(p)
    p.add_argument("--compute-missing", action="store_true", help="run table/collapse if absent")

    p = sub.add_parser("verify", help="JSON verification report; non-zero exit on failure")
    _common(p)
    p.add_argument("--tau", type=float, help="override every threshold (sabotage check)")
    p.add_argument("--skip-size", action="store_true")
    return parser


def _threshold(cfg, n, e0):
    sub = ex.replace(cfg, block_sizes=(n,), e0s=(e0,))
    return ex.run_calibrate(sub)[(n, e0)]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    cfg = _config(args)

    if args.command == "calibrate":
        for (n, e0), th in sorted(ex.run_calibrate(cfg).items()):
            print(f"n={n} e0={e0:g} tau={th.tau:.6g} size={th.achieved_size}")
    elif args.command == "power":
        th = _threshold(cfg, args.n, args.e0)
        seed = ex.rng.derive_seed(cfg.seed, "power", args.n, args.e0, get_profile(args.profile).kind, args.delta)
        pt = estimate_power(args.n, args.e0, args.profile, args.delta, th, cfg.M1, seed)
        print(json.dumps(ex.asdict(pt)))
    elif args.command == "delta-min":
        th = _threshold(cfg, args.n, args.e0)
        curve = power_curve(args.n, args.e0, args.profile, th, M1=cfg.M1, seed=cfg.seed,
                            alpha=cfg.alpha, target_power=cfg.target_power)
        for pt in curve:
            print(f"delta={pt.delta:.6g} power={pt.power:.4f} se={pt.se:.4f}")
        est = delta_min_hat(curve, cfg.target_power)
        print(json.dumps(ex.asdict(est)))
    elif args.command == "table":
        ests = ex.run_table(cfg)
        for (n, e0, prof), est in sorted(ests.items()):
            val = "--" if not est.reached else f"{est.delta_min_hat:.4f}"
            print(f"n={n:5d} e0={e0:<5g} {prof:<11s} {val}")
    elif args.command == "collapse":
        ex.run_collapse(cfg)
        print(cfg.out / "collapse.csv")
    elif args.command == "figures":
        for name, path in ex.run_figures(cfg, compute_missing=args.compute_missing).items():
            print(f"{name}: {path}")
    elif args.command == "verify":
        report = ex.run_verify(cfg, tau_override=args.tau, include_size=not args.skip_size)
        for c in report["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
        return 0 if report["passed"] else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
