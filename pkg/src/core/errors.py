"""
Exception hierarchy shared by the engine, services and CLI.

Each error carries the exit code the CLI returns when it escapes a command.
"""

from __future__ import annotations

from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class CiaoSRError(Exception):
    """Base class for every error raised by this package."""

    exit_code: int = EXIT_RUNTIME


class UsageError(CiaoSRError):
    """Bad command-line input detected after argument parsing."""

    exit_code = EXIT_USAGE


class ConfigError(CiaoSRError, ValueError):
    """Invalid experiment or model configuration."""


class ShapeError(CiaoSRError, ValueError):
    """Tensor, weight or image dimensions do not agree."""


class GraphError(CiaoSRError):
    """The autodiff tape cannot produce gradients for the requested loss."""


class NonFiniteError(CiaoSRError, FloatingPointError):
    """A NaN or Inf appeared at an op boundary in debug mode."""


class ImageFormatError(CiaoSRError):
    """Unsupported, corrupt or non-RGB image file."""


class DataError(CiaoSRError):
    """Dataset is empty or an image cannot serve as a training example."""


class CheckpointError(CiaoSRError):
    """Checkpoint file is malformed or does not match the live model."""


class TrainingError(CiaoSRError):
    """Training aborted, e.g. on a non-finite loss."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step
