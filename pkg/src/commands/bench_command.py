"""
`bench`: parameter counts and median render time for one image.
"""

from __future__ import annotations

import argparse

from src.commands.common import Command, positive_int, scale_value, write_rows
from src.core.errors import EXIT_OK
from src.schemas.evaluation import BenchRow
from src.services.bench_service import bench
from src.services.checkpoint_service import build_model, load_checkpoint
from src.services.image_io import load_image
from src.services.rendering_service import output_size


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ckpt", required=True, help="checkpoint to load")
    parser.add_argument("--in", dest="input", required=True, help="input PNG/PPM image")
    parser.add_argument("--scale", type=scale_value, required=True, help="real magnification >= 1")
    parser.add_argument("--repeat", type=positive_int, default=5, help="timed renders (default: 5)")


def run(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    model = build_model(checkpoint)
    image = load_image(args.input)
    _, h, w = image.shape
    h_out, w_out = output_size(h, w, scale=(args.scale, args.scale))
    row = bench(model, image, h_out, w_out, args.repeat, header_parameters=checkpoint.header.parameter_count)
    write_rows([row], BenchRow)
    return EXIT_OK


command = Command(name="bench", help="time rendering and count parameters", configure=configure, handler=run)
