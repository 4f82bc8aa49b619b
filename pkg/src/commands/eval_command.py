"""
`eval`: per-scale metric table for a checkpoint, with a bicubic column and an
optional area-weighted baseline checkpoint.
"""

from __future__ import annotations

import argparse
from typing import List

from src.commands.common import Command, comma_list, scale_value, write_rows
from src.core.config import settings
from src.core.errors import EXIT_OK, UsageError
from src.core.logging import get_logger
from src.schemas.evaluation import EvaluationRow
from src.schemas.model import Variant
from src.services.checkpoint_service import load_model
from src.services.data_pipeline import open_dataset
from src.services.evaluation_service import evaluate

logger = get_logger(__name__)

DEFAULT_SCALES = "2,3,4,6,8,12"
_RGB_COLUMNS = ["psnr_rgb", "bicubic_psnr_rgb", "baseline_psnr_rgb"]
_Y_COLUMNS = ["psnr_y", "bicubic_psnr_y", "baseline_psnr_y"]
_BASELINE_COLUMNS = ["baseline_psnr_rgb", "baseline_psnr_y"]


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ckpt", required=True, help="checkpoint to evaluate")
    parser.add_argument("--data", required=True, help="directory of GT images, or synthetic:N[:SEED]")
    parser.add_argument(
        "--scales",
        type=comma_list(scale_value),
        default=comma_list(scale_value)(DEFAULT_SCALES),
        help=f"comma-separated scales (default: {DEFAULT_SCALES})",
    )
    parser.add_argument("--metric", choices=["rgb", "y"], default=None, help="keep only RGB or only Y-channel PSNR columns")
    parser.add_argument(
        "--baseline",
        choices=["bicubic", "liif"],
        default="bicubic",
        help="extra comparison column; liif reads its checkpoint from CIAOSR_BASELINE_CKPT",
    )


def excluded_columns(metric: str, baseline: str) -> List[str]:
    exclude: List[str] = []
    if metric == "rgb":
        exclude += _Y_COLUMNS
    elif metric == "y":
        exclude += _RGB_COLUMNS
    if baseline != "liif":
        exclude += _BASELINE_COLUMNS
    return exclude


def run(args: argparse.Namespace) -> int:
    baseline = None
    if args.baseline == "liif":
        if not settings.BASELINE_CKPT:
            raise UsageError("--baseline liif needs CIAOSR_BASELINE_CKPT to point at a baseline checkpoint")
        baseline = load_model(settings.BASELINE_CKPT)
        if baseline.variant != Variant.liif:
            logger.warning("Baseline checkpoint is not the area-weighted variant", variant=baseline.variant.value)

    model = load_model(args.ckpt)
    dataset = open_dataset(args.data)
    rows = evaluate(model, dataset, args.scales, baseline)
    write_rows(rows, EvaluationRow, exclude=excluded_columns(args.metric, args.baseline))
    return EXIT_OK


command = Command(name="eval", help="evaluate a checkpoint over a list of scales", configure=configure, handler=run)
