"""Command line entry point ``solve``.

    solve convergence --config run.toml [--serial] [--out DIR]
    solve scatter     --config run.toml
    solve dispersion  --config run.toml
    solve mesh-info   --config run.toml

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
The environment variable NHDFEM_NUM_THREADS sets the assembly thread count.
"""
import argparse
import json
import logging
import sys

from . import config as config_mod
from .drivers import SolverFailure, mesh_info, run_convergence_study, run_dispersion, run_scattering
from .errors import ConfigError, InvalidArgument, MeshParseError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def build_parser():
    parser = argparse.ArgumentParser(prog="solve", description="Maxwell / hydrodynamic Drude FEM solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("convergence", "manufactured-solution convergence study"),
                            ("scatter", "plane-wave scattering frequency sweep"),
                            ("dispersion", "nonlocal permittivity scan"),
                            ("mesh-info", "print mesh statistics")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--serial", action="store_true", help="single-threaded, bit-reproducible run")
        p.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _run(args):
    cfg = config_mod.load(args.config)
    if args.command == "convergence":
        table = run_convergence_study(cfg, args.out, args.serial)
        print(table.format())
    elif args.command == "scatter":
        rows = run_scattering(cfg, args.out, args.serial)
        for r in rows:
            print(" ".join(f"{v:.6e}" for v in r))
    elif args.command == "dispersion":
        rows = run_dispersion(cfg, args.out, args.serial)
        print(f"{len(rows)} rows, {sum(r[4] for r in rows)} at the pole")
    else:
        print(json.dumps(mesh_info(cfg), indent=2, sort_keys=True))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _run(args)
    except (ConfigError, InvalidArgument) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, MeshParseError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
