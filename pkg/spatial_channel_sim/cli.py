import argparse
import logging
import os
import sys
from typing import List, Optional

import yaml
from pydantic import ValidationError

from .analysis import analyze_route, write_report
from .config import config_echo, load_config, parse_overrides, validate_config
from .errors import ConfigError, SimulationError
from .providers import CsvSweepProvider
from .simulator import REPORT_NAME, run_drive, run_monte_carlo

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
MONTE_CARLO_NAME = "monte_carlo.yml"


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="Run config YAML (default: $SPATIAL_SIM_CONFIG or config/umi_street_canyon.yml)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="Override a config value by dotted path, e.g. scenario.lambda_c=0.5",
    )
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--output-dir", help="Artifact directory (default: $SPATIAL_SIM_OUTPUT_DIR or ./output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatial-sim",
        description="Spatially consistent mmWave drive-route channel simulator",
    )
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Simulate a single drive")
    _add_config_args(run_parser)
    run_parser.add_argument("--pdps", action="store_true", help="Also write per-tick PDP CSVs")
    run_parser.add_argument("--analysis", action="store_true", help="Also write the route analysis report")

    mc_parser = subparsers.add_parser("mc", help="Run a Monte Carlo batch of drives")
    _add_config_args(mc_parser)
    mc_parser.add_argument("--replicates", type=int, help="Number of replicate drives")

    analyze_parser = subparsers.add_parser("analyze", help="Analyse a directory of PDP CSV sweeps")
    analyze_parser.add_argument("sweeps", help="Directory with one subdirectory (or CSV) per location")
    analyze_parser.add_argument("--spacing", type=float, default=5.0, help="Distance between locations, m (default: 5)")
    _add_config_args(analyze_parser)

    validate_parser = subparsers.add_parser("validate", help="Check a run config")
    _add_config_args(validate_parser)
    return parser


def _load(args: argparse.Namespace):
    overrides = parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if getattr(args, "replicates", None) is not None:
        overrides["replicates"] = args.replicates
    if getattr(args, "pdps", False):
        overrides["emit.pdps"] = True
    if getattr(args, "analysis", False):
        overrides["emit.analysis_report"] = True
    return load_config(args.config, overrides)


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    result = validate_config(cfg)
    if not result.valid:
        for error in result.errors:
            print(f"invalid: {error}", file=sys.stderr)
        return EXIT_CONFIG
    print("config is valid")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    log = run_drive(_load(args))
    for path in log.artifacts:
        print(path)
    return EXIT_OK


def _cmd_mc(args: argparse.Namespace) -> int:
    cfg = _load(args)
    summary = run_monte_carlo(cfg)
    path = os.path.join(cfg.output_dir, MONTE_CARLO_NAME)
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(
            {"config": config_echo(cfg), "summary": summary.model_dump()}, f, sort_keys=False
        )
    print(path)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _load(args)
    report = analyze_route(CsvSweepProvider(args.sweeps), args.spacing, cfg.analysis)
    print(write_report(os.path.join(cfg.output_dir, REPORT_NAME), report, config_echo(cfg)))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "mc": _cmd_mc,
    "analyze": _cmd_analyze,
    "validate": _cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValidationError, yaml.YAMLError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (SimulationError, OSError) as e:
        logger.exception(f"Run failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
