"""
mppgeo - Command line entry point
Config-driven runner for most probable path experiments on frame bundles
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

try:
    from .config import LOG_LEVEL, N_JOBS, OUTPUT_DIR, configure_logging
    from .errors import MPPGeoError
    from .services.experiments import COMMANDS, load_config
except ImportError:
    # Fallback for direct execution
    from config import LOG_LEVEL, N_JOBS, OUTPUT_DIR, configure_logging
    from errors import MPPGeoError
    from services.experiments import COMMANDS, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mppgeo",
        description="Most probable paths and anisotropic statistics on frame bundles",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=None, help="Output directory (default: config output_dir or MPPGEO_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--steps", type=int, default=None, help="Override the integrator step count")
    parser.add_argument("--scheme", choices=["euler", "rk4"], default=None, help="Override the integrator scheme")
    parser.add_argument("--n-jobs", type=int, default=N_JOBS, help="Parallel workers for sweeps and estimators")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level")
    return parser


def run(args: argparse.Namespace) -> dict:
    """Load the config and dispatch to the command; raises MPPGeoError on failure"""
    config = load_config(args.config, seed=args.seed, steps=args.steps, scheme=args.scheme)
    out = Path(args.out or config.output_dir or Path(OUTPUT_DIR) / args.command)
    logger.info(f"Running {args.command} with {args.config} into {out}")
    command = COMMANDS[args.command]
    if args.command in ("sweep", "estimate"):
        return command(config, out, n_jobs=args.n_jobs)
    return command(config, out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        run(args)
    except MPPGeoError as e:
        logger.error(f"{args.command} failed: {e.message}")
        sys.stderr.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
        return e.exit_code
    logger.info(f"{args.command} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
