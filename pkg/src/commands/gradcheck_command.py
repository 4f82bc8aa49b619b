"""
`gradcheck`: finite-difference check of every differentiable op and of the
assembled heads.
"""

from __future__ import annotations

import argparse

from src.commands.common import Command, comma_list, positive_float, write_rows
from src.core.errors import EXIT_OK, EXIT_RUNTIME
from src.core.logging import get_logger
from src.schemas.evaluation import GradcheckRow
from src.services.gradcheck_service import SUITES, run_gradcheck

logger = get_logger(__name__)


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--module", choices=["all", *SUITES], default="all", help="which suite to run (default: all)")
    parser.add_argument(
        "--eps",
        type=comma_list(positive_float),
        default=[1e-3],
        help="comma-separated finite-difference steps (default: 1e-3)",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for the random test inputs")


def run(args: argparse.Namespace) -> int:
    rows = run_gradcheck(args.module, args.eps, args.seed)
    write_rows(rows, GradcheckRow)
    failed = [f"{r.suite}/{r.op}" for r in rows if not r.passed]
    if failed:
        logger.error("Gradient check failed", failures=len(failed), ops=failed)
        return EXIT_RUNTIME
    return EXIT_OK


command = Command(name="gradcheck", help="verify analytic gradients numerically", configure=configure, handler=run)
