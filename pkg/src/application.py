import argparse
import sys

from loguru import logger
from pathlib import Path
from typing import Sequence

from . import __version__
from .accountant.ledger import DEFAULT_DELTA, epsilon_after
from .accountant.rdp import RoundCost
from .configs.config import (
    DEFAULT_CONFIG_FILE,
    available_presets,
    config_keys,
    parse_flag_value,
    read_experiment_config,
)
from .configs.models import ExperimentConfig
from .experiments import RunResponse
from .experiments.runner import compare, run_experiment, sweep
from .utils.enums import RequestStatus
from .utils.errors import AdapDpflError

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR")


def config_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, default=None, help=f"TOML config file (default: {DEFAULT_CONFIG_FILE})")
    parser.add_argument("--preset", choices=available_presets(), default=None, help="bundled preset applied first")
    group = parser.add_argument_group("config overrides")
    for key in config_keys():
        group.add_argument(f"--{key}", dest=key, type=parse_flag_value, default=argparse.SUPPRESS, metavar="VALUE")

    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adap-dpfl", description="Federated learning with adaptive sample-level DP.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO")
    commands = parser.add_subparsers(dest="command", required=True)

    parents = [config_parser()]
    commands.add_parser("run", parents=parents, help="run one experiment")

    sweep_parser = commands.add_parser("sweep", parents=parents, help="one run per value of a config key")
    sweep_parser.add_argument("--axis", required=True, help="dotted config key or a unique bare field name")
    sweep_parser.add_argument("--values", nargs="*", type=parse_flag_value, default=[])
    sweep_parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    compare_parser = commands.add_parser("compare", parents=parents, help="every clip/noise scenario per seed")
    compare_parser.add_argument("--seeds", nargs="*", type=int, default=[0])
    compare_parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    accountant_parser = commands.add_parser("accountant", help="epsilon after identical composed rounds")
    accountant_parser.add_argument("--q", type=float, required=True, help="sampling ratio")
    accountant_parser.add_argument("--sigma", type=float, required=True, help="noise scale")
    accountant_parser.add_argument("--rounds", type=int, required=True)
    accountant_parser.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {key: value for key, value in vars(args).items() if "." in key}
    path = args.config
    if path is None and args.preset is None and DEFAULT_CONFIG_FILE.is_file():
        path = DEFAULT_CONFIG_FILE

    return read_experiment_config(path, overrides, args.preset)


def query_accountant(args: argparse.Namespace) -> int:
    guarantee = epsilon_after(RoundCost(q=args.q, sigma=args.sigma), args.rounds, args.delta)
    print(f"epsilon={guarantee.epsilon!r} best_order={guarantee.best_order} delta={guarantee.delta!r}")
    return 0


def exit_status(responses: Sequence[RunResponse]) -> int:
    failures = [response for response in responses if response.status is RequestStatus.FAILURE]
    for response in failures:
        logger.error(response.message)

    return 1 if failures else 0


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "accountant":
        return query_accountant(args)

    cfg = load_config(args)
    match args.command:
        case "run":
            responses = [run_experiment(cfg)]
        case "sweep":
            responses = sweep(cfg, args.axis, args.values, args.jobs)
        case "compare":
            responses = compare(cfg, args.seeds, args.jobs)
        case _:
            raise ValueError(f"Unknown command {args.command!r}.")

    return exit_status(responses)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger.remove()
    logger.add(sys.stderr, level=args.log_level)

    try:
        return dispatch(args)

    except (AdapDpflError, ValueError) as err:
        logger.error(str(err))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
