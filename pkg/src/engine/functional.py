"""
Differentiable operator set: elementwise math, reductions, shape ops,
matmul, conv2d, softmax, unfold and average downsampling.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.errors import ShapeError
from src.engine.tensor import Function, Tensor


# Elementwise


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Div(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        return grad / self.b, -grad * self.a / (self.b * self.b)


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Exp(Function):
    def forward(self, a):
        self.out = np.exp(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, a):
        self.a = a
        return np.log(a)

    def backward(self, grad):
        return (grad / self.a,)


class Abs(Function):
    def forward(self, a):
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad):
        return (grad * self.sign,)


class ReLU(Function):
    def forward(self, a):
        self.mask = a > 0
        # NaN propagates
        return np.maximum(a, np.zeros((), dtype=a.dtype))

    def backward(self, grad):
        return (grad * self.mask,)


class Square(Function):
    def forward(self, a):
        self.a = a
        return a * a

    def backward(self, grad):
        return (2 * grad * self.a,)


# Reductions and shape


class Sum(Function):
    def forward(self, a, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return np.asarray(a.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            axes = (self.axis,) if isinstance(self.axis, int) else tuple(self.axis)
            axes = tuple(ax % len(self.shape) for ax in axes)
            grad = np.expand_dims(grad, axes)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a, shape=()):
        self.shape = a.shape
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, a, axes=None):
        self.axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, a, index=None):
        self.shape, self.dtype, self.index = a.shape, a.dtype, index
        return a[index]

    def backward(self, grad):
        full = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(full, self.index, grad)
        return (full,)


class Take(Function):
    def forward(self, a, indices=None, axis=0):
        self.shape, self.dtype = a.shape, a.dtype
        self.indices, self.axis = np.asarray(indices), axis
        return np.take(a, self.indices, axis=axis)

    def backward(self, grad):
        axis = self.axis % len(self.shape)
        full = np.zeros(self.shape, dtype=self.dtype)
        moved = np.moveaxis(full, axis, 0)
        g = np.moveaxis(grad, list(range(axis, axis + self.indices.ndim)), list(range(self.indices.ndim)))
        np.add.at(moved, self.indices, g)
        return (full,)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


# Linear algebra and image ops


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError("matmul needs operands with at least 2 dimensions")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.a, self.b
        if b.ndim == 2 and a.ndim > 2:
            # Shared right operand: reduce over the batch without materialising per-row products.
            grad_b = a.reshape(-1, a.shape[-1]).T @ grad.reshape(-1, grad.shape[-1])
        else:
            grad_b = np.matmul(np.swapaxes(a, -1, -2), grad)
        if a.ndim == 2 and b.ndim > 2:
            grad_a = np.matmul(grad, np.swapaxes(b, -1, -2)).reshape(-1, *a.shape).sum(axis=0)
        else:
            grad_a = np.matmul(grad, np.swapaxes(b, -1, -2))
        return grad_a, grad_b


class Conv2d(Function):
    """Stride-1 cross-correlation with zero padding."""

    def forward(self, x, w, b, padding=0):
        if x.ndim != 4 or w.ndim != 4:
            raise ShapeError("conv2d expects N×C×H×W input and O×C×k×k weight")
        if x.shape[1] != w.shape[1]:
            raise ShapeError(f"conv2d channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")
        k = w.shape[2]
        if k != w.shape[3] or k % 2 == 0:
            raise ShapeError(f"conv2d kernel must be square and odd, got {w.shape[2:]}")
        if padding < 0:
            raise ShapeError("conv2d padding must be non-negative")
        if b.shape != (w.shape[0],):
            raise ShapeError(f"conv2d bias shape {b.shape} does not match {w.shape[0]} outputs")
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
        if xp.shape[2] < k or xp.shape[3] < k:
            raise ShapeError("conv2d input smaller than kernel")
        self.xp, self.w, self.padding = xp, w, padding
        if k == 1:
            out = np.einsum("nchw,oc->nohw", xp, w[:, :, 0, 0], optimize=True)
        else:
            # cols: N×C×H'×W'×k×k
            cols = sliding_window_view(xp, (k, k), axis=(2, 3))
            out = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        return (out + b[None, :, None, None]).astype(x.dtype, copy=False)

    def backward(self, grad):
        xp, w, p = self.xp, self.w, self.padding
        k = w.shape[2]
        h_out, w_out = grad.shape[2], grad.shape[3]
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_w = np.empty_like(w)
        grad_xp = np.zeros_like(xp)
        for di in range(k):
            for dj in range(k):
                patch = xp[:, :, di : di + h_out, dj : dj + w_out]
                grad_w[:, :, di, dj] = np.tensordot(grad, patch, axes=([0, 2, 3], [0, 2, 3]))
                grad_xp[:, :, di : di + h_out, dj : dj + w_out] += np.einsum(
                    "nohw,oc->nchw", grad, w[:, :, di, dj], optimize=True
                )
        grad_x = grad_xp[:, :, p : p + xp.shape[2] - 2 * p, p : p + xp.shape[3] - 2 * p] if p else grad_xp
        return grad_x, grad_w, grad_b


class Softmax(Function):
    def forward(self, a, axis=-1):
        self.axis = axis
        shifted = a - a.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / e.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - (grad * y).sum(axis=self.axis, keepdims=True)),)


def _edge_indices(size: int, radius: int) -> np.ndarray:
    return np.clip(np.arange(-radius, size + radius), 0, size - 1)


class Unfold(Function):
    """k×k neighbourhood gathered into channels, borders edge-replicated.

    Output channel order is channel-major: c·k² + di·k + dj.
    """

    def forward(self, x, k=3):
        if k % 2 == 0 or k < 1:
            raise ShapeError(f"unfold kernel size must be odd, got {k}")
        n, c, h, w = x.shape
        r = k // 2
        self.rows, self.cols = _edge_indices(h, r), _edge_indices(w, r)
        self.shape, self.k = x.shape, k
        xp = x[:, :, self.rows][:, :, :, self.cols]
        windows = sliding_window_view(xp, (k, k), axis=(2, 3))  # N×C×H×W×k×k
        return np.ascontiguousarray(windows.transpose(0, 1, 4, 5, 2, 3)).reshape(n, c * k * k, h, w)

    def backward(self, grad):
        n, c, h, w = self.shape
        k = self.k
        g = grad.reshape(n, c, k, k, h, w)
        gp = np.zeros((n, c, h + k - 1, w + k - 1), dtype=grad.dtype)
        for di in range(k):
            for dj in range(k):
                gp[:, :, di : di + h, dj : dj + w] += g[:, :, di, dj]
        rows = np.zeros((n, c, h, w + k - 1), dtype=grad.dtype)
        np.add.at(rows, (slice(None), slice(None), self.rows), gp)
        out = np.zeros((n, c, h, w), dtype=grad.dtype)
        np.add.at(out, (slice(None), slice(None), slice(None), self.cols), rows)
        return (out,)


class AvgDownsample(Function):
    """Non-overlapping s×s mean pooling; trailing rows/cols are dropped."""

    def forward(self, x, s=2):
        if s < 1:
            raise ShapeError(f"downsample factor must be >= 1, got {s}")
        n, c, h, w = x.shape
        if h < s or w < s:
            raise ShapeError(f"downsample factor {s} exceeds feature size {h}×{w}")
        self.shape, self.s = x.shape, s
        hs, ws = h // s, w // s
        return x[:, :, : hs * s, : ws * s].reshape(n, c, hs, s, ws, s).mean(axis=(3, 5))

    def backward(self, grad):
        n, c, h, w = self.shape
        s = self.s
        hs, ws = grad.shape[2], grad.shape[3]
        full = np.zeros(self.shape, dtype=grad.dtype)
        spread = np.broadcast_to(grad[:, :, :, None, :, None] / (s * s), (n, c, hs, s, ws, s))
        full[:, :, : hs * s, : ws * s] = spread.reshape(n, c, hs * s, ws * s)
        return (full,)


# Public functional API


def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Mul.apply(a, b)


def div(a: Tensor, b: Tensor) -> Tensor:
    return Div.apply(a, b)


def neg(a: Tensor) -> Tensor:
    return Neg.apply(a)


def exp(a: Tensor) -> Tensor:
    return Exp.apply(a)


def log(a: Tensor) -> Tensor:
    return Log.apply(a)


def abs(a: Tensor) -> Tensor:  # noqa: A001
    return Abs.apply(a)


def relu(a: Tensor) -> Tensor:
    return ReLU.apply(a)


def square(a: Tensor) -> Tensor:
    return Square.apply(a)


def sum(a: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(a, axes=axes)


def getitem(a: Tensor, index: Any) -> Tensor:
    return GetItem.apply(a, index=index)


def take(a: Tensor, indices: np.ndarray, axis: int = 0) -> Tensor:
    return Take.apply(a, indices=indices, axis=axis)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if len(tensors) == 1:
        return tensors[0]
    return Concat.apply(*tensors, axis=axis)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, padding: int = 0) -> Tensor:
    return Conv2d.apply(x, weight, bias, padding=padding)


def softmax(logits: Tensor, axis: int = -1) -> Tensor:
    if not -logits.ndim <= axis < logits.ndim:
        raise ShapeError(f"softmax axis {axis} out of range for {logits.ndim} dimensions")
    return Softmax.apply(logits, axis=axis)


def unfold(feat: Tensor, k: int = 3) -> Tensor:
    return Unfold.apply(feat, k=k)


def avg_downsample(feat: Tensor, s: int) -> Tensor:
    return AvgDownsample.apply(feat, s=s)


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    return mean(abs(pred - target))


def flatten_spatial(feat: Tensor) -> Tensor:
    """N×C×H×W → N×(H·W)×C."""
    n, c, h, w = feat.shape
    return transpose(reshape(feat, (n, c, h * w)), (0, 2, 1))


def unflatten_spatial(tokens: Tensor, h: int, w: int) -> Tensor:
    """N×(H·W)×C → N×C×H×W."""
    n, _, c = tokens.shape
    return reshape(transpose(tokens, (0, 2, 1)), (n, c, h, w))

