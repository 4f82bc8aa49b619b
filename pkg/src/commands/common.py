"""
Shared pieces of the command-line surface: argument types and CSV output.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, TextIO, Tuple, Type

from src.core.errors import EXIT_USAGE
from src.schemas.evaluation import CsvRow
from src.schemas.training import PRESETS, ExperimentConfig, load_experiment_config


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class Command:
    """One subcommand: its flags and the handler returning an exit code."""

    name: str
    help: str
    configure: Callable[[argparse.ArgumentParser], None]
    handler: Callable[[argparse.Namespace], int]


def positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' is not a number") from None
    if not math.isfinite(number) or number <= 0:
        raise argparse.ArgumentTypeError(f"'{value}' must be a positive finite number")
    return number


def scale_value(value: str) -> float:
    number = positive_float(value)
    if number < 1.0:
        raise argparse.ArgumentTypeError(f"scale must be >= 1, got {value}")
    return number


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' is not an integer") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"'{value}' must be >= 1")
    return number


def comma_list(item_type: Callable[[str], object]) -> Callable[[str], list]:
    def parse(value: str) -> list:
        items = [v.strip() for v in value.split(",") if v.strip()]
        if not items:
            raise argparse.ArgumentTypeError("expected a comma-separated list")
        return [item_type(v) for v in items]

    return parse


def size_value(value: str) -> Tuple[int, int]:
    """`HxW` → (H, W)."""
    parts = value.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"size must look like HxW, got '{value}'")
    return positive_int(parts[0]), positive_int(parts[1])


def add_config_argument(parser: argparse.ArgumentParser, default: str = "desk") -> None:
    parser.add_argument(
        "--config",
        default=default,
        help=f"preset name ({', '.join(PRESETS)}) or path to a JSON experiment config (default: {default})",
    )


def add_seed_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="seed overriding the config's training seed")


def write_rows(
    rows: Iterable[CsvRow],
    row_type: Type[CsvRow],
    exclude: Sequence[str] = (),
    stream: Optional[TextIO] = None,
) -> None:
    """CSV with a header row to stdout; columns in `exclude` are dropped."""
    stream = stream or sys.stdout
    columns: List[str] = row_type.columns()
    keep = [i for i, name in enumerate(columns) if name not in exclude]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([columns[i] for i in keep])
    for row in rows:
        values = row.values()
        writer.writerow([values[i] for i in keep])
    stream.flush()


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_experiment_config(args.config)
    return cfg if args.seed is None else cfg.with_seed(args.seed)
