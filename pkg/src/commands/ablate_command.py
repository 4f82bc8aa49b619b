"""
`ablate`: train each model variant under the same config and seed, then score
them on shared held-out textures.
"""

from __future__ import annotations

import argparse

from src.commands.common import Command, add_config_argument, add_seed_argument, comma_list, positive_int, resolve_config, write_rows
from src.core.errors import EXIT_OK, ConfigError
from src.schemas.evaluation import AblationRow
from src.schemas.model import Variant
from src.services.ablation_service import parse_variants, run_ablation

DEFAULT_VARIANTS = ",".join(v.value for v in Variant)


def variant_value(value: str) -> Variant:
    try:
        return parse_variants([value])[0]
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="training images directory, or synthetic:N[:SEED]")
    parser.add_argument(
        "--variants",
        type=comma_list(variant_value),
        default=comma_list(variant_value)(DEFAULT_VARIANTS),
        help=f"comma-separated variants (default: {DEFAULT_VARIANTS})",
    )
    parser.add_argument(
        "--local-size",
        dest="local_sizes",
        type=comma_list(positive_int),
        default=[2],
        help="comma-separated local window sizes (default: 2)",
    )
    parser.add_argument("--work-dir", default=None, help="keep one checkpoint per run in this directory")
    add_config_argument(parser)
    add_seed_argument(parser)


def run(args: argparse.Namespace) -> int:
    rows = run_ablation(args.data, args.variants, args.local_sizes, resolve_config(args), args.work_dir)
    write_rows(rows, AblationRow)
    return EXIT_OK


command = Command(name="ablate", help="compare model variants", configure=configure, handler=run)
