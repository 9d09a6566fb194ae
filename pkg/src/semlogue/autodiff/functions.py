"""Differentiable primitives of the tensor core."""

from __future__ import annotations

from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.settings import Numerics
from ..utils.exceptions import ShapeError
from .tensor import Function, Tensor

Axis = Optional[Union[int, Tuple[int, ...]]]


def _broadcast_shape(name: str, *shapes: Tuple[int, ...]) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(*shapes))
    except ValueError as e:
        raise ShapeError(name, shapes, "not broadcastable") from e


# =============================================================================
# Elementwise arithmetic
# =============================================================================
class Add(Function):
    name = "add"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape(self.name, a.shape, b.shape)
        return a + b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a_shape, b_shape = self.input_shapes
        return self.unbroadcast(grad, a_shape), self.unbroadcast(grad, b_shape)


class Sub(Function):
    name = "sub"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape(self.name, a.shape, b.shape)
        return a - b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a_shape, b_shape = self.input_shapes
        return self.unbroadcast(grad, a_shape), self.unbroadcast(-grad, b_shape)


class Mul(Function):
    name = "mul"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape(self.name, a.shape, b.shape)
        self.saved["a"], self.saved["b"] = a, b
        return a * b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.saved["a"], self.saved["b"]
        return self.unbroadcast(grad * b, a.shape), self.unbroadcast(grad * a, b.shape)


class AddScalar(Function):
    name = "add_scalar"

    def forward(self, x: np.ndarray, value: float) -> np.ndarray:
        return x + value

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        return (grad,)


class MulScalar(Function):
    name = "mul_scalar"

    def forward(self, x: np.ndarray, value: float) -> np.ndarray:
        self.saved["value"] = value
        return x * value

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        return (grad * self.saved["value"],)


class PowScalar(Function):
    name = "pow_scalar"

    def forward(self, x: np.ndarray, exponent: float) -> np.ndarray:
        self.saved["x"], self.saved["exponent"] = x, exponent
        return x**exponent

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        x, p = self.saved["x"], self.saved["exponent"]
        return (grad * p * x ** (p - 1.0),)


# =============================================================================
# Linear algebra and layout
# =============================================================================
class MatMul(Function):
    name = "matmul"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError(self.name, (a.shape, b.shape), "inner dimensions differ")
        _broadcast_shape(self.name, a.shape[:-2], b.shape[:-2])
        self.saved["a"], self.saved["b"] = a, b
        return a @ b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.saved["a"], self.saved["b"]
        grad_a = grad @ np.swapaxes(b, -1, -2)
        grad_b = np.swapaxes(a, -1, -2) @ grad
        return self.unbroadcast(grad_a, a.shape), self.unbroadcast(grad_b, b.shape)


class Transpose(Function):
    name = "transpose"

    def forward(self, x: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
        axes = tuple(axes) if axes else tuple(reversed(range(x.ndim)))
        if sorted(a % x.ndim for a in axes) != list(range(x.ndim)):
            raise ShapeError(self.name, (x.shape,), f"invalid axes {list(axes)}")
        self.saved["axes"] = axes
        return np.transpose(x, axes)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        return (np.transpose(grad, np.argsort(self.saved["axes"])),)


class Reshape(Function):
    name = "reshape"

    def forward(self, x: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        try:
            return x.reshape(shape)
        except ValueError as e:
            raise ShapeError(self.name, (x.shape, tuple(shape))) from e

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        return (grad.reshape(self.input_shapes[0]),)


class Concat(Function):
    name = "concat"

    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:
        try:
            out = np.concatenate(arrays, axis=axis)
        except ValueError as e:
            raise ShapeError(self.name, [a.shape for a in arrays]) from e
        self.saved["axis"] = axis
        return out

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        axis = self.saved["axis"]
        bounds = np.cumsum([shape[axis] for shape in self.input_shapes])[:-1]
        return tuple(np.split(grad, bounds, axis=axis))


class Slice(Function):
    """Basic indexing (integers and slices); no fancy indexing."""

    name = "slice"

    def forward(self, x: np.ndarray, key: Any) -> np.ndarray:
        try:
            out = x[key]
        except IndexError as e:
            raise ShapeError(self.name, (x.shape,), f"index {key!r}") from e
        self.saved["key"] = key
        return np.array(out)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros(self.input_shapes[0], dtype=grad.dtype)
        full[self.saved["key"]] += grad
        return (full,)


class EmbeddingLookup(Function):
    name = "embedding_lookup"

    def forward(self, weight: np.ndarray, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if weight.ndim != 2:
            raise ShapeError(self.name, (weight.shape, ids.shape), "weight must be 2-D")
        if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
            raise ShapeError(self.name, (weight.shape, ids.shape), f"token id out of range [0, {weight.shape[0]})")
        self.saved["ids"] = ids
        return weight[ids]

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros(self.input_shapes[0], dtype=grad.dtype)
        np.add.at(full, self.saved["ids"], grad)
        return (full,)


class Gather(Function):
    """Pick one entry per row along the last axis."""

    name = "gather"

    def forward(self, x: np.ndarray, index: np.ndarray) -> np.ndarray:
        index = np.asarray(index, dtype=np.int64)
        if index.shape != x.shape[:-1]:
            raise ShapeError(self.name, (x.shape, index.shape), "index must match leading dims")
        if index.size and (index.min() < 0 or index.max() >= x.shape[-1]):
            raise ShapeError(self.name, (x.shape, index.shape), "index out of range")
        self.saved["index"] = index
        return np.take_along_axis(x, index[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros(self.input_shapes[0], dtype=grad.dtype)
        np.put_along_axis(full, self.saved["index"][..., None], grad[..., None], axis=-1)
        return (full,)


# =============================================================================
# Nonlinearities
# =============================================================================
class ReLU(Function):
    name = "relu"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.saved["mask"] = x > 0
        return np.where(self.saved["mask"], x, 0.0).astype(x.dtype, copy=False)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        return (grad * self.saved["mask"],)


class Tanh(Function):
    name = "tanh"

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = np.tanh(x)
        self.saved["y"] = y
        return y

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        y = self.saved["y"]
        return (grad * (1.0 - y * y),)


class Sigmoid(Function):
    name = "sigmoid"

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = 0.5 * (1.0 + np.tanh(0.5 * x))
        self.saved["y"] = y
        return y

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        y = self.saved["y"]
        return (grad * y * (1.0 - y),)


class Softmax(Function):
    name = "softmax"

    def forward(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        shifted = x - x.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)
        self.saved["y"], self.saved["axis"] = y, axis
        return y

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        y, axis = self.saved["y"], self.saved["axis"]
        return (y * (grad - (grad * y).sum(axis=axis, keepdims=True)),)


class LogSoftmax(Function):
    name = "log_softmax"

    def forward(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        shifted = x - x.max(axis=axis, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        y = shifted - log_z
        self.saved["y"], self.saved["axis"] = y, axis
        return y

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        y, axis = self.saved["y"], self.saved["axis"]
        return (grad - np.exp(y) * grad.sum(axis=axis, keepdims=True),)


class LogSoftmaxNLL(Function):
    """Fused log-softmax and negative log-likelihood over the last axis."""

    name = "log_softmax_nll"

    def forward(self, logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
        targets = np.asarray(targets, dtype=np.int64)
        if targets.shape != logits.shape[:-1]:
            raise ShapeError(self.name, (logits.shape, targets.shape), "targets must match leading dims")
        shifted = logits - logits.max(axis=-1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        log_probs = shifted - log_z
        self.saved["probs"], self.saved["targets"] = np.exp(log_probs), targets
        return -np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        probs, targets = self.saved["probs"], self.saved["targets"]
        out = probs.copy()
        np.put_along_axis(
            out, targets[..., None], np.take_along_axis(out, targets[..., None], axis=-1) - 1.0, axis=-1
        )
        return (grad[..., None] * out,)


class ClampedLog(Function):
    """Natural log with inputs clamped below at the log floor."""

    name = "clamped_log"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.saved["x"] = x
        return np.log(np.maximum(x, Numerics.LOG_CLAMP))

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        x = self.saved["x"]
        live = x > Numerics.LOG_CLAMP
        return (np.where(live, grad / np.where(live, x, 1.0), 0.0),)


class LayerNorm(Function):
    name = "layer_norm"

    def forward(self, x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = Numerics.LAYER_NORM_EPS) -> np.ndarray:
        if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
            raise ShapeError(self.name, (x.shape, gamma.shape, beta.shape), "gain/bias must match last dim")
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        rstd = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
        x_hat = centered * rstd
        self.saved.update(x_hat=x_hat, rstd=rstd, gamma=gamma)
        return x_hat * gamma + beta

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x_hat, rstd, gamma = self.saved["x_hat"], self.saved["rstd"], self.saved["gamma"]
        lead = tuple(range(grad.ndim - 1))
        d_hat = grad * gamma
        dx = rstd * (
            d_hat - d_hat.mean(axis=-1, keepdims=True) - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        return dx, (grad * x_hat).sum(axis=lead), grad.sum(axis=lead)


# =============================================================================
# Reductions
# =============================================================================
def _expand(grad: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad.reshape((1,) * len(shape)), shape)
    if not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        for a in sorted(ax % len(shape) for ax in axes):
            grad = np.expand_dims(grad, a)
    return np.broadcast_to(grad, shape)


def _count(shape: Tuple[int, ...], axis: Axis) -> int:
    if axis is None:
        return int(np.prod(shape)) if shape else 1
    axes = (axis,) if isinstance(axis, int) else axis
    return int(np.prod([shape[a] for a in axes]))


class Sum(Function):
    name = "sum"

    def forward(self, x: np.ndarray, axis: Axis = None, keepdims: bool = False) -> np.ndarray:
        self.saved["axis"], self.saved["keepdims"] = axis, keepdims
        return np.array(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        shape = self.input_shapes[0]
        return (np.array(_expand(grad, shape, self.saved["axis"], self.saved["keepdims"])),)


class Mean(Function):
    name = "mean"

    def forward(self, x: np.ndarray, axis: Axis = None, keepdims: bool = False) -> np.ndarray:
        self.saved["axis"], self.saved["keepdims"] = axis, keepdims
        return np.array(x.sum(axis=axis, keepdims=keepdims) / _count(x.shape, axis))

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:
        shape = self.input_shapes[0]
        axis = self.saved["axis"]
        return (np.array(_expand(grad, shape, axis, self.saved["keepdims"])) / _count(shape, axis),)


# =============================================================================
# Functional helpers
# =============================================================================
def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def embedding_lookup(weight: Tensor, ids: np.ndarray) -> Tensor:
    return EmbeddingLookup.apply(weight, ids=ids)


def gather(x: Tensor, index: np.ndarray) -> Tensor:
    return Gather.apply(x, index=index)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = Numerics.LAYER_NORM_EPS) -> Tensor:
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def softmax_nll(logits: Tensor, targets: np.ndarray) -> Tensor:
    return LogSoftmaxNLL.apply(logits, targets=targets)


PRIMITIVES = {
    cls.name: cls
    for cls in (
        Add,
        Sub,
        Mul,
        AddScalar,
        MulScalar,
        PowScalar,
        MatMul,
        Transpose,
        Reshape,
        Concat,
        Slice,
        EmbeddingLookup,
        Gather,
        ReLU,
        Tanh,
        Sigmoid,
        Softmax,
        LogSoftmax,
        LogSoftmaxNLL,
        ClampedLog,
        LayerNorm,
        Sum,
        Mean,
    )
}


def apply_primitive(op: str, *inputs: Tensor, **kwargs: Any) -> Tensor:
    """Apply a primitive by name."""
    try:
        primitive = PRIMITIVES[op]
    except KeyError as e:
        raise ShapeError(op, [t.shape for t in inputs], "unknown primitive") from e
    return primitive.apply(*inputs, **kwargs)
