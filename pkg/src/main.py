import sys
from typing import Optional, Sequence

from src.core.errors import EXIT_RUNTIME, CiaoSRError
from src.core.logging import bind_command, setup_logging

logger = setup_logging()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and map its outcome to an exit code."""
    from src.command_setup import build_parser

    parser = build_parser()
    args = parser.parse_args(argv)
    bind_command(args.command)

    try:
        return args.handler(args)
    except CiaoSRError as e:
        logger.error("Command failed", error=str(e), error_type=type(e).__name__, exit_code=e.exit_code)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected failure", error=str(e))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
