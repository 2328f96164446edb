# main.py
"""
Koopman tempering - command-line entry point.

    python main.py solve --model m.json --temps 12 --sweeps 2000 --output trace.csv

Every subcommand lives in commands/ and registers itself through
register_commands(subparsers). Results go to standard output, diagnostics
to standard error as "[module] message". Errors map to exit codes:
2 config, 3 model parse, 4 numeric, 5 enumeration cap, 6 dataset.
"""

import argparse
import logging
import sys
import traceback

import config
from commands import baselines, bench, diagnose, fit, generate, oracle, solve
from errors import KoopmanError

logger = logging.getLogger("main")


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="[%(name)s] %(message)s",
        stream=sys.stderr,
        force=True,
    )
    # RankDeficientFit and friends arrive through warnings.warn
    logging.captureWarnings(True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kooptemper",
        description="Optimal control of Koopman-lifted switched linear models by parallel tempering.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.VERSION}")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in (solve, oracle, diagnose, baselines, fit, bench, generate):
        module.register_commands(subparsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args) or 0
    except KoopmanError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
