"""Command line entry point: ``scattercouple {couple,validate,quadrature}``.

Exit status: 0 success, 1 validation or run failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_coupling_config
from .coupler import CouplingError, run_couple, validate_dataset
from .fem_targets import MeshError, parse_mesh, quadrature_points, write_targets_csv
from .interpolation import TIME_MODES
from .scattered_io import ScatteredDataError

log = logging.getLogger("scattercouple")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scattercouple",
        description="Interpolate time-series scattered data onto FEM quadrature points.",
    )
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    couple = sub.add_parser("couple", help="run the interpolation and write a csvt output")
    couple.add_argument("--config", required=True, help="XML coupling config")
    couple.add_argument("--mesh", help="mesh file whose quadrature points are the targets")
    couple.add_argument("--region", help="element region of the mesh to use")
    couple.add_argument("--order", type=int, choices=[1, 2, 3], help="quadrature order")
    couple.add_argument("--targets-file", help="explicit target points (x,y[,z] per line)")
    couple.add_argument("--k", type=int, help="number of neighbours")
    couple.add_argument("--p", type=float, help="weighting exponent")
    couple.add_argument("--time-mode", choices=TIME_MODES)
    couple.add_argument("--times", help="comma-separated query times, or 'all-steps'")
    couple.add_argument("--backend", choices=["kdtree", "linear"])
    couple.add_argument("--output", help="output directory")
    couple.add_argument("--workers", type=int, default=1, help="threads for loading and neighbour search")

    validate = sub.add_parser("validate", help="check a config and every file it references")
    validate.add_argument("--config", required=True)

    quad = sub.add_parser("quadrature", help="dump the quadrature points of a mesh as CSV")
    quad.add_argument("--mesh", required=True)
    quad.add_argument("--region")
    quad.add_argument("--order", type=int, default=2, choices=[1, 2, 3])
    quad.add_argument("--output", required=True, help="CSV file to write")

    # log level is accepted after the subcommand too
    for p in (couple, validate, quad):
        p.add_argument("--log-level", dest="sub_log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def _couple(args) -> int:
    config = parse_coupling_config(args.config).with_overrides(
        k=args.k,
        p=args.p,
        time_mode=args.time_mode,
        times=args.times,
        backend=args.backend,
        mesh=args.mesh,
        region=args.region,
        order=args.order,
        targets_file=args.targets_file,
        output=args.output,
    )
    result = run_couple(config, workers=args.workers)
    log.info("wrote %d step files, master %s", len(result.step_files), result.master_path)
    return EXIT_OK


def _validate(args) -> int:
    config = parse_coupling_config(args.config)
    report = validate_dataset(config)
    if report.findings:
        print(report, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


def _quadrature(args) -> int:
    targets = quadrature_points(parse_mesh(args.mesh), args.order, args.region)
    write_targets_csv(targets, args.output)
    log.info("wrote %d quadrature points to %s", len(targets), args.output)
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    level = getattr(args, "sub_log_level", None) or args.log_level
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handlers = {"couple": _couple, "validate": _validate, "quadrature": _quadrature}
    try:
        return handlers[args.command](args)
    except CouplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (ConfigError, ScatteredDataError, MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
