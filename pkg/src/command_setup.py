"""
Subcommand setup for the command-line application.
"""

import argparse

from src.commands import COMMANDS
from src.commands.common import ArgumentParser


def setup_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    Register every subcommand.

    Args:
        subparsers: the `add_subparsers()` action of the top-level parser
    """
    for command in COMMANDS:
        parser = subparsers.add_parser(command.name, help=command.help, description=command.help)
        command.configure(parser)
        parser.set_defaults(handler=command.handler)


def build_parser() -> ArgumentParser:
    from src.core.config import settings

    parser = ArgumentParser(prog="ciaosr", description=settings.APP_NAME)
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)
    subparsers.required = True
    setup_commands(subparsers)
    return parser
