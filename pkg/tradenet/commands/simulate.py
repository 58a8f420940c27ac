"""
simulate: grow a trade network and write its U_T, returns and avalanches
"""

import argparse
import logging

from tradenet.commands.common import add_common_arguments, output_dir, resolve_config
from tradenet.config import get_settings
from tradenet.services.dynamics import run_batch, run_simulation
from tradenet.storage import write_simulation

logger = logging.getLogger(__name__)


def _seed_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid seed list '{text}'") from e


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Run the trade-network simulation")
    add_common_arguments(parser)
    parser.add_argument("--steps", type=int, help="Number of steps, overrides the config")
    parser.add_argument(
        "--seeds", type=_seed_list, help="Comma-separated seeds, one replica directory each"
    )
    parser.add_argument("--jobs", type=int, help="Worker processes for --seeds")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(args, dynamics={"steps": args.steps})
    out = output_dir(args, config)

    if not args.seeds:
        logger.info(f"Simulating {config.dynamics.steps} steps with seed {config.seed}")
        output = run_simulation(config.dynamics, config.seed)
        write_simulation(output, config, out)
        return 0

    jobs = args.jobs or get_settings().default_jobs
    logger.info(f"Simulating {len(args.seeds)} replicas with {jobs} workers")
    outputs = run_batch(config.dynamics, args.seeds, jobs)
    for seed, output in zip(args.seeds, outputs):
        replica = config.model_copy(update={"seed": seed})
        write_simulation(output, replica, out / f"seed_{seed}")
    return 0
