"""
`train`: fit a model on a dataset directory and write a checkpoint plus loss CSV.
"""

from __future__ import annotations

import argparse

from src.commands.common import Command, add_config_argument, add_seed_argument, resolve_config, write_rows
from src.core.errors import EXIT_OK
from src.schemas.evaluation import TrainSummaryRow
from src.services.training_service import loss_log_path_for, train


def configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="directory of PNG/PPM images, or synthetic:N[:SEED]")
    parser.add_argument("--out", required=True, help="checkpoint path; the loss log goes next to it as <stem>.loss.csv")
    add_config_argument(parser)
    add_seed_argument(parser)


def run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    result = train(args.data, cfg, args.out, loss_log_path_for(args.out))
    write_rows(
        [TrainSummaryRow(steps=len(result.losses), final_loss=result.final_loss, checkpoint=str(args.out))],
        TrainSummaryRow,
    )
    return EXIT_OK


command = Command(name="train", help="train a model", configure=configure, handler=run)
