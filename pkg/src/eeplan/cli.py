"""Command line entry point: ``eeplan <kind> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config
from .experiments import KINDS, ExperimentSpec, run

_BOUNDS = {"t1": "t1", "uatf": "uatf", "closed": "closed"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eeplan", description="Energy-efficiency planning experiments")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="sectioned key/value config file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--scheme", choices=("mr", "zf", "mmse"), action="append",
                       help="combining scheme (repeatable; default: all)")
        p.add_argument("--bound", choices=tuple(_BOUNDS), help="SE bound")
        p.add_argument("--deployments", type=int, help="Monte Carlo deployments per grid point")
        p.add_argument("--draws", type=int, help="channel draws per deployment")
        p.add_argument("--no-plots", action="store_true", help="write CSV only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        loaded = load_config(args.config)
        spec = ExperimentSpec.from_config(
            args.kind,
            loaded.experiment,
            out_dir=args.out,
            seed=args.seed,
            schemes=tuple(args.scheme) if args.scheme else None,
            bound=args.bound,
            deployments=args.deployments,
            draws=args.draws,
            plots=False if args.no_plots else None,
        )
    except (ConfigError, ValueError, OSError) as exc:
        print(f"eeplan: {exc}", file=sys.stderr)
        return 2
    result = run(spec, loaded)
    public = {k: v for k, v in result.summary.items() if not k.startswith("_")}
    print(json.dumps({"kind": spec.kind, "artifacts": result.artifacts, **public}, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
