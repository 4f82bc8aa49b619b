import logging
import logging.config
import sys
from typing import Optional

import structlog

from src.core.config import settings

# Keys the console renderer lays out itself; everything else becomes k=v.
_CONSOLE_FIELDS = ("timestamp", "level", "logger", "event")


def get_log_level() -> int:
    """Numeric level for `settings.LOG_LEVEL`, INFO when unrecognised."""
    level = logging.getLevelName(settings.LOG_LEVEL.upper())
    return level if isinstance(level, int) else logging.INFO


def _upper_level(logger, method_name, event_dict):
    event_dict["level"] = "WARNING" if method_name == "warn" else method_name.upper()
    return event_dict


def _trim_timestamp(logger, method_name, event_dict):
    """`2026-01-02T03:04:05.678901Z` → `2026-01-02T03:04:05Z`."""
    timestamp = event_dict.get("timestamp")
    if timestamp and "." in timestamp:
        event_dict["timestamp"] = timestamp.split(".")[0] + "Z"
    return event_dict


def _short_logger_name(logger, method_name, event_dict):
    name = event_dict.get("logger")
    if name and name.startswith("src."):
        event_dict["logger"] = name[len("src.") :]
    return event_dict


def _render_console(logger, method_name, event_dict) -> str:
    """`timestamp [LEVEL  ] logger: event key=value ...`"""
    line = f"{event_dict.get('timestamp', '')} [{event_dict.get('level', 'INFO'):<7}]"
    if event_dict.get("logger"):
        line += f" {event_dict['logger']}:"
    line += f" {event_dict.get('event', '')}"
    context = " ".join(f"{k}={v}" for k, v in event_dict.items() if k not in _CONSOLE_FIELDS)
    if context:
        line += f" {context}"
    return line


def configure_structlog() -> None:
    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        _trim_timestamp,
        _upper_level,
        structlog.stdlib.add_logger_name,
        _short_logger_name,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]
    if settings.LOG_FORMAT.lower() == "json":
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(_render_console)

    structlog.configure(
        processors=processors,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.make_filtering_bound_logger(get_log_level()),
        context_class=dict,
        cache_logger_on_first_use=True,
    )


def configure_standard_logging() -> None:
    """Route rendered events through stdlib logging to stderr.

    stdout carries CSV results only.
    """
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "rendered": {"format": "%(message)s"},
            },
            "handlers": {
                "stderr": {
                    "class": "logging.StreamHandler",
                    "formatter": "rendered",
                    "stream": sys.stderr,
                },
            },
            "loggers": {
                "": {
                    "level": get_log_level(),
                    "handlers": ["stderr"],
                    "propagate": False,
                },
            },
        }
    )


def setup_logging() -> structlog.BoundLogger:
    """Configure stdlib logging and structlog for the whole process."""
    configure_standard_logging()
    configure_structlog()
    return structlog.get_logger("src.main")


def bind_command(name: str) -> None:
    """Tag every event emitted while a subcommand runs with its name."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=name)


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    return structlog.get_logger(name)
