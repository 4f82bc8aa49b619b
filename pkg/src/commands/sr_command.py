"""
`sr`: super-resolve one image to a scale or an explicit size, optionally as a
multi-step chain with a one-step comparison.
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path
from typing import List, Sequence

import numpy as np

from src.commands.common import Command, comma_list, scale_value, size_value, write_rows
from src.core.errors import EXIT_OK, UsageError
from src.core.logging import get_logger
from src.models.network import SuperResolutionModel
from src.schemas.evaluation import StepsRow
from src.schemas.metrics import MetricConfig, MetricMode
from src.services.checkpoint_service import load_model
from src.services.evaluation_service import lr_size
from src.services.image_io import load_image, quantize, save_image
from src.services.metrics import psnr
from src.services.rendering_service import chain_render, output_size, super_resolve
from src.services.resampling import bicubic_resize

logger = get_logger(__name__)

_PRODUCT_TOL = 1e-6


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ckpt", required=True, help="checkpoint to load")
    parser.add_argument("--in", dest="input", required=True, help="input PNG/PPM image")
    target = parser.add_mutually_exclusive_group()
    target.add_argument("--scale", type=scale_value, help="real magnification >= 1")
    target.add_argument("--size", type=size_value, help="explicit output size HxW")
    parser.add_argument(
        "--steps",
        type=comma_list(scale_value),
        help="comma-separated chain of scales (each > 1) rendered one after another",
    )
    parser.add_argument("--out", default=None, help="output PNG/PPM (default: <input stem>_sr.png)")


def _chain_label(chain: Sequence[float]) -> str:
    return ",".join(f"{s:g}" for s in chain)


def steps_report(model: SuperResolutionModel, image: np.ndarray, chain: Sequence[float]) -> List[StepsRow]:
    """Treat `image` as GT: downscale by the chain's product, then compare one step with the chain."""
    _, h, w = image.shape
    total = float(np.prod(chain))
    lr = bicubic_resize(image, *lr_size(h, w, total))
    y_cfg = MetricConfig.for_scale(MetricMode.y_channel, total)
    y_cfg = y_cfg.model_copy(update={"border_shave": min(y_cfg.border_shave, (min(h, w) - 1) // 2)})
    rows = []
    for label, chain_used in ((f"{total:g}", [total]), (_chain_label(chain), list(chain))):
        pred = chain_render(lr, chain_used, model, target=(h, w))
        rows.append(
            StepsRow(
                steps=label,
                output_height=pred.shape[1],
                output_width=pred.shape[2],
                psnr_rgb=psnr(quantize(pred), image, MetricConfig()),
                psnr_y=psnr(quantize(pred), image, y_cfg),
            )
        )
        if len(chain) == 1:
            break
    if len(rows) == 2:
        logger.info(
            "One-step vs chain",
            chain=rows[1].steps,
            one_step_psnr_y=round(rows[0].psnr_y, 3),
            chain_psnr_y=round(rows[1].psnr_y, 3),
            one_step_best=rows[0].psnr_y >= rows[1].psnr_y,
        )
    return rows


def run(args: argparse.Namespace) -> int:
    if args.scale is None and args.size is None and not args.steps:
        raise UsageError("one of --scale, --size or --steps is required")
    if args.steps:
        if any(s <= 1.0 for s in args.steps):
            raise UsageError("every --steps scale must exceed 1")
        product = float(np.prod(args.steps))
        if args.scale is not None and not math.isclose(product, args.scale, rel_tol=_PRODUCT_TOL):
            raise UsageError(f"--steps multiply to {product:g}, which differs from --scale {args.scale:g}")

    image = load_image(args.input)
    model = load_model(args.ckpt)
    _, h, w = image.shape
    scale = args.scale if args.scale is not None else (float(np.prod(args.steps)) if args.steps else None)
    h_out, w_out = output_size(h, w, scale=(scale, scale) if scale is not None else None, size=args.size)

    if args.steps:
        result = chain_render(image, args.steps, model, target=(h_out, w_out))
        write_rows(steps_report(model, image, args.steps), StepsRow)
    else:
        result = super_resolve(model, image, h_out, w_out)

    out = Path(args.out) if args.out else Path(f"{Path(args.input).stem}_sr.png")
    save_image(result, out)
    logger.info("Super-resolved image written", path=str(out), height=h_out, width=w_out)
    return EXIT_OK


command = Command(name="sr", help="super-resolve an image", configure=configure, handler=run)
