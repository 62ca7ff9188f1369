"""
Command-line interface for the DS-II simulator.
"""
import argparse
import sys
from typing import List, Optional

from .. import __version__
from ..core.config import load_config
from ..core.errors import DS2Error
from ..core.runner import EXIT_CONFIG, EXIT_OK, exit_code_for, run_estimate, run_simulation, run_sweep
from ..utils.display import print_status, set_quiet, show_banner


def setup_argparse() -> argparse.ArgumentParser:
    """Set up command line argument parser."""
    parser = argparse.ArgumentParser(
        prog="ds2sim",
        description="DS-II simulator - Picard-Duhamel pseudospectral runs, existence-time estimates and sweeps"
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-q", "--quiet",
        action="store_true",
        help="Only print warnings, errors and requested results"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    run = subparsers.add_parser("run", help="Evolve a config and write diagnostics, snapshots and images")
    run.add_argument("config", help="Path to the config file")

    estimate = subparsers.add_parser("estimate-t", help="Estimate the local existence time T*")
    estimate.add_argument("config", help="Path to the config file")

    sweep = subparsers.add_parser("sweep", help="Run every member of a parameter sweep")
    sweep.add_argument("config", help="Path to the config file")
    sweep.add_argument(
        "-w", "--workers",
        type=int,
        default=None,
        help="Worker processes (default: sweep.workers or the number of physical cores)"
    )

    validate = subparsers.add_parser("validate", help="Parse and check a config, print it normalized")
    validate.add_argument("config", help="Path to the config file")
    return parser


def process_args(args: argparse.Namespace) -> int:
    """Run the selected subcommand.

    Args:
        args: Parsed command line arguments

    Returns:
        Exit code (0 success, 1 config error, 2 rejected step or no contraction, 3 I/O error)
    """
    if args.command == "validate":
        config = load_config(args.config)
        print(config.normalized(), end="")
        return EXIT_OK

    show_banner(__version__)
    if args.command == "run":
        config = load_config(args.config, mode="run")
        summary = run_simulation(config)
        print_status(f"Run finished at t={summary.trajectory.t:.6g}; outputs in {summary.output_dir}", "ok")
        return EXIT_OK

    if args.command == "estimate-t":
        config = load_config(args.config, mode="estimate-t")
        T_star, report = run_estimate(config)
        print(f"T_star = {T_star!r}")
        print(report.curve_csv(), end="")
        return EXIT_OK

    config = load_config(args.config, mode="sweep")
    if args.workers is not None and args.workers < 1:
        print_status("--workers must be at least 1", "error")
        return EXIT_CONFIG
    results = run_sweep(config, workers=args.workers)
    failed = [r for r in results if not r[1]]
    if failed:
        print_status(f"{len(failed)} of {len(results)} sweep members failed", "warning")
    else:
        print_status(f"All {len(results)} sweep members finished", "ok")
    return max((code for _, _, _, code in results), default=EXIT_OK)


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and map errors onto exit codes.

    Returns:
        Exit code
    """
    parser = setup_argparse()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; --help and --version exit 0
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    previous = set_quiet(args.quiet)
    try:
        return process_args(args)
    except KeyboardInterrupt:
        print_status("Operation cancelled by user", "warning")
        return EXIT_CONFIG
    except (DS2Error, OSError) as e:
        print_status(str(e), "error")
        return exit_code_for(e)
    finally:
        set_quiet(previous)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI.

    Returns:
        Exit code
    """
    return run_cli(argv)


if __name__ == '__main__':
    sys.exit(main())
