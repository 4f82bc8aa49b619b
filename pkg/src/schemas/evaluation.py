"""
Pydantic schemas for CSV result rows.
"""

from __future__ import annotations

from typing import ClassVar, List, Optional

from pydantic import BaseModel


class CsvRow(BaseModel):
    """Row model whose field order is the CSV column order."""

    @classmethod
    def columns(cls) -> List[str]:
        return list(cls.model_fields)

    def values(self) -> List[str]:
        return [_fmt(getattr(self, name)) for name in self.columns()]


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if value == float("inf"):
            return "inf"
        return f"{value:.6f}"
    return str(value)


class LossLogRow(CsvRow):
    step: int
    lr: float
    loss: float

    def values(self) -> List[str]:
        # Loss logs keep full precision for bit-exact replay comparison.
        return [str(self.step), repr(self.lr), repr(self.loss)]


class EvaluationRow(CsvRow):
    IN_SCALE_MAX: ClassVar[float] = 4.0

    scale: float
    group: str
    images: int
    psnr_rgb: float
    psnr_y: float
    ssim: float
    bicubic_psnr_rgb: float
    bicubic_psnr_y: float
    bicubic_ssim: float
    baseline_psnr_rgb: Optional[float] = None
    baseline_psnr_y: Optional[float] = None
    lpips: Optional[float] = None

    @classmethod
    def group_of(cls, scale: float) -> str:
        return "in-scale" if scale <= cls.IN_SCALE_MAX else "out-of-scale"


class AblationRow(CsvRow):
    variant: str
    local_size: int
    parameters: int
    final_loss: float
    psnr_x2: float
    psnr_x3: float
    psnr_x4: float


class GradcheckRow(CsvRow):
    suite: str
    op: str
    eps: float
    max_rel_error: float
    threshold: float
    passed: bool

    def values(self) -> List[str]:
        return [
            self.suite,
            self.op,
            f"{self.eps:.0e}",
            f"{self.max_rel_error:.3e}",
            f"{self.threshold:.0e}",
            str(self.passed),
        ]


class BenchRow(CsvRow):
    parameters: int
    parameters_m: float
    head_parameters: int
    header_parameters: int
    repeat: int
    median_seconds: float
    queries_per_second: float
    output_height: int
    output_width: int


class StepsRow(CsvRow):
    steps: str
    output_height: int
    output_width: int
    psnr_rgb: float
    psnr_y: float


class TrainSummaryRow(CsvRow):
    steps: int
    final_loss: float
    checkpoint: str

    def values(self) -> List[str]:
        return [str(self.steps), repr(self.final_loss), self.checkpoint]
