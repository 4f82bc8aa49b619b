"""
Dense tensor with reverse-mode automatic differentiation.

Every differentiable op is a `Function` subclass. `Function.apply` runs the
forward pass on raw numpy arrays and, when gradients are wanted, records the
call on the thread's `AutodiffTape`. `AutodiffTape.backward` replays the
records in reverse and accumulates gradients into leaf tensors.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.config import settings
from src.core.errors import GraphError, NonFiniteError, ShapeError

DEFAULT_DTYPE = np.float32

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]


def _as_array(data: Any, dtype: Optional[np.dtype]) -> np.ndarray:
    if dtype is not None:
        return np.asarray(data, dtype=dtype)
    if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
        return data
    return np.asarray(data, dtype=DEFAULT_DTYPE)


class Tensor:
    """N-dimensional float array with optional gradient tracking."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
    ):
        self.data: np.ndarray = _as_array(data, dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        # Index of the tape record that produced this tensor; None for leaves.
        self._tape_index: Optional[int] = None

    # Array metadata
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._tape_index is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        get_tape().backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # Operators delegate to the functional module
    def _lift(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.add(self, self._lift(other))

    def __radd__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.add(self._lift(other), self)

    def __sub__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.sub(self, self._lift(other))

    def __rsub__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.sub(self._lift(other), self)

    def __mul__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.mul(self, self._lift(other))

    def __rmul__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.mul(self._lift(other), self)

    def __truediv__(self, other: Any) -> "Tensor":
        from src.engine import functional as F

        return F.div(self, self._lift(other))

    def __neg__(self) -> "Tensor":
        from src.engine import functional as F

        return F.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from src.engine import functional as F

        return F.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from src.engine import functional as F

        return F.getitem(self, index)

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from src.engine import functional as F

        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from src.engine import functional as F

        return F.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> "Tensor":
        from src.engine import functional as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from src.engine import functional as F

        return F.transpose(self, axes or None)


class Parameter(Tensor):
    """Trainable leaf tensor."""

    def __init__(self, data: ArrayLike, dtype: Optional[np.dtype] = None):
        super().__init__(data, requires_grad=True, dtype=dtype)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out the axes numpy broadcasting added or stretched."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """Base class for differentiable operations.

    Subclasses implement `forward` on numpy arrays and `backward`, which maps
    the gradient of the output to one gradient (or None) per input.
    """

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        fn = cls()
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)
        if settings.DEBUG_FINITE_CHECKS and not np.all(np.isfinite(out_data)):
            raise NonFiniteError(f"{cls.__name__} produced non-finite values")
        track = is_grad_enabled() and any(t.requires_grad for t in inputs)
        out = Tensor(out_data, requires_grad=track)
        if track:
            get_tape().record(fn, inputs, out)
        return out


@dataclass
class TapeRecord:
    fn: Function
    inputs: Tuple[Tensor, ...]
    output: Tensor


class AutodiffTape:
    """Ordered record of differentiable calls for one execution stream."""

    def __init__(self) -> None:
        self.records: List[TapeRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def record(self, fn: Function, inputs: Tuple[Tensor, ...], output: Tensor) -> None:
        output._tape_index = len(self.records)
        self.records.append(TapeRecord(fn, inputs, output))

    def clear(self) -> None:
        for rec in self.records:
            rec.output._tape_index = None
        self.records = []

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into every reachable leaf's `grad`, then clear."""
        if loss.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            raise GraphError("loss is not connected to any tensor that requires grad")

        seed = np.ones_like(loss.data)
        if loss.is_leaf:
            _accumulate(loss, seed)
            self.clear()
            return
        if loss._tape_index >= len(self.records) or self.records[loss._tape_index].output is not loss:
            raise GraphError("loss was not recorded on this thread's tape")

        pending = {id(loss): seed}
        for rec in reversed(self.records[: loss._tape_index + 1]):
            grad = pending.pop(id(rec.output), None)
            if grad is None:
                continue
            for inp, g in zip(rec.inputs, rec.fn.backward(grad)):
                if g is None or not inp.requires_grad:
                    continue
                g = unbroadcast(g, inp.shape)
                if inp.is_leaf:
                    _accumulate(inp, g)
                else:
                    key = id(inp)
                    pending[key] = pending[key] + g if key in pending else g
        self.clear()


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    g = np.asarray(g, dtype=t.dtype)
    t.grad = g.copy() if t.grad is None else t.grad + g


_local = threading.local()


def get_tape() -> AutodiffTape:
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = _local.tape = AutodiffTape()
    return tape


def is_grad_enabled() -> bool:
    return getattr(_local, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording on the current thread."""
    previous = is_grad_enabled()
    _local.grad_enabled = False
    try:
        yield
    finally:
        _local.grad_enabled = previous
