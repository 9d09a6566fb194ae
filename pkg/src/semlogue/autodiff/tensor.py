"""Tensor and tape for define-by-run reverse-mode differentiation."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.exceptions import GraphError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


class Function:
    """
    Base class for differentiable primitives.

    Subclasses implement ``forward`` on raw arrays and ``backward`` returning one
    gradient array (or ``None``) per tensor input, already reduced to the input's
    shape. Intermediates needed by ``backward`` live in ``self.saved``.
    """

    name = "function"

    def __init__(self) -> None:
        self.saved: Dict[str, Any] = {}
        self.input_shapes: Tuple[Tuple[int, ...], ...] = ()

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"forward not implemented for {self.name}")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"backward not implemented for {self.name}")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        """Run the primitive and record it on the active tape when needed."""
        fn = cls()
        fn.input_shapes = tuple(t.data.shape for t in inputs)
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)

        tape = TapeGraph.current()
        needs_grad = tape is not None and any(t.requires_grad for t in inputs)
        out = Tensor._wrap(out_data, requires_grad=needs_grad)
        if needs_grad:
            tape.record(fn, inputs, out)
        return out

    @staticmethod
    def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        """Sum out broadcast dimensions so ``grad`` matches ``shape``."""
        if grad.shape == shape:
            return grad
        while grad.ndim > len(shape):
            grad = grad.sum(axis=0)
        for axis, extent in enumerate(shape):
            if extent == 1 and grad.shape[axis] != 1:
                grad = grad.sum(axis=axis, keepdims=True)
        return grad


@dataclass
class Node:
    """One recorded primitive application."""

    index: int
    function: Function
    inputs: Tuple["Tensor", ...]
    output: "Tensor"

    @property
    def primitive(self) -> str:
        return self.function.name


_local = threading.local()


@dataclass
class TapeGraph:
    """
    Ordered record of primitive applications.

    A tape is active inside ``with TapeGraph() as tape:``; primitives applied to
    tensors that require grad are appended in construction order. A tape belongs
    to the thread that entered it.
    """

    nodes: List[Node] = field(default_factory=list)

    def __enter__(self) -> "TapeGraph":
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = []
            _local.stack = stack
        stack.append(self)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        _local.stack.pop()

    @staticmethod
    def current() -> Optional["TapeGraph"]:
        stack = getattr(_local, "stack", None)
        return stack[-1] if stack else None

    def record(self, function: Function, inputs: Sequence["Tensor"], output: "Tensor") -> Node:
        node = Node(index=len(self.nodes), function=function, inputs=tuple(inputs), output=output)
        self.nodes.append(node)
        output._node = node
        output._tape = self
        return node

    def leaves(self) -> List["Tensor"]:
        """Leaf tensors requiring grad, in first-use order."""
        seen: Dict[int, Tensor] = {}
        for node in self.nodes:
            for tensor in node.inputs:
                if tensor.requires_grad and tensor._node is None and id(tensor) not in seen:
                    seen[id(tensor)] = tensor
        return list(seen.values())

    def __len__(self) -> int:
        return len(self.nodes)


class no_grad:
    """Context manager that suspends recording on the current thread."""

    def __enter__(self) -> "no_grad":
        self._saved = getattr(_local, "stack", None)
        _local.stack = []
        return self

    def __exit__(self, *exc_info: Any) -> None:
        _local.stack = self._saved


class Tensor:
    """Real-valued multi-dimensional array that may take part in differentiation."""

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[Any] = None,
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype.kind == "f" else DEFAULT_DTYPE
        self.data = np.array(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.name = name
        self._node: Optional[Node] = None
        self._tape: Optional[TapeGraph] = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = array
        out.requires_grad = requires_grad
        out.name = None
        out._node = None
        out._tape = None
        return out

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------
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
        return self._node is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Constant copy of this tensor; gradients never flow through it."""
        return Tensor(self.data.copy(), requires_grad=False)

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={list(self.shape)}{grad}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # ------------------------------------------------------------------
    # Operators
    # ------------------------------------------------------------------
    def __add__(self, other: Any) -> "Tensor":
        from . import functions as F

        if _is_scalar(other):
            return F.AddScalar.apply(self, value=float(other))
        return F.Add.apply(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Tensor":
        from . import functions as F

        if _is_scalar(other):
            return F.AddScalar.apply(self, value=-float(other))
        return F.Sub.apply(self, as_tensor(other))

    def __rsub__(self, other: Any) -> "Tensor":
        from . import functions as F

        if _is_scalar(other):
            return F.AddScalar.apply(F.MulScalar.apply(self, value=-1.0), value=float(other))
        return F.Sub.apply(as_tensor(other), self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import functions as F

        if _is_scalar(other):
            return F.MulScalar.apply(self, value=float(other))
        return F.Mul.apply(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Tensor":
        if not _is_scalar(other):
            raise TypeError("Tensor division is only defined for scalar divisors")
        return self * (1.0 / float(other))

    def __neg__(self) -> "Tensor":
        from . import functions as F

        return F.MulScalar.apply(self, value=-1.0)

    def __pow__(self, exponent: float) -> "Tensor":
        from . import functions as F

        return F.PowScalar.apply(self, exponent=float(exponent))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import functions as F

        return F.MatMul.apply(self, as_tensor(other))

    def __getitem__(self, key: Any) -> "Tensor":
        from . import functions as F

        return F.Slice.apply(self, key=key)

    # ------------------------------------------------------------------
    # Methods mirroring primitives
    # ------------------------------------------------------------------
    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from . import functions as F

        return F.Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from . import functions as F

        return F.Mean.apply(self, axis=axis, keepdims=keepdims)

    def transpose(self, *axes: int) -> "Tensor":
        from . import functions as F

        return F.Transpose.apply(self, axes=axes or None)

    def reshape(self, *shape: int) -> "Tensor":
        from . import functions as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.Reshape.apply(self, shape=shape)

    def relu(self) -> "Tensor":
        from . import functions as F

        return F.ReLU.apply(self)

    def tanh(self) -> "Tensor":
        from . import functions as F

        return F.Tanh.apply(self)

    def sigmoid(self) -> "Tensor":
        from . import functions as F

        return F.Sigmoid.apply(self)

    def softmax(self, axis: int = -1) -> "Tensor":
        from . import functions as F

        return F.Softmax.apply(self, axis=axis)

    def log_softmax(self, axis: int = -1) -> "Tensor":
        from . import functions as F

        return F.LogSoftmax.apply(self, axis=axis)

    def log(self) -> "Tensor":
        from . import functions as F

        return F.ClampedLog.apply(self)


def _is_scalar(value: Any) -> bool:
    return isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool)


def as_tensor(value: Any, dtype: Optional[Any] = None) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


def backward(
    graph: TapeGraph,
    root: Tensor,
    leaves: Optional[Iterable[Tensor]] = None,
) -> Dict[Tensor, Tensor]:
    """
    Reverse-mode sweep over ``graph`` from the scalar ``root``.

    Returns a gradient for every leaf requiring grad that the graph touched, plus
    every tensor in ``leaves`` (zero tensors for leaves the root does not use).
    Each node is visited once, in reverse construction order.
    """
    if root.size != 1:
        raise GraphError(f"backward root must be a scalar, got shape {list(root.shape)}")
    if root._node is None or root._tape is not graph:
        raise GraphError("backward root was not produced on this graph")

    grads: Dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    leaf_grads: Dict[int, np.ndarray] = {}
    leaf_tensors: Dict[int, Tensor] = {}

    for node in graph.nodes[root._node.index :: -1]:
        grad = grads.pop(id(node.output), None)
        if grad is None:
            continue
        input_grads = node.function.backward(grad)
        for tensor, input_grad in zip(node.inputs, input_grads):
            if input_grad is None or not tensor.requires_grad:
                continue
            target = leaf_grads if tensor._node is None else grads
            key = id(tensor)
            if tensor._node is None:
                leaf_tensors[key] = tensor
            if key in target:
                target[key] = target[key] + input_grad
            else:
                target[key] = np.array(input_grad, dtype=tensor.data.dtype, copy=True)

    result: Dict[Tensor, Tensor] = {}
    for key, tensor in leaf_tensors.items():
        result[tensor] = Tensor._wrap(leaf_grads[key], requires_grad=False)
    if leaves is not None:
        for tensor in leaves:
            if tensor not in result:
                result[tensor] = Tensor._wrap(np.zeros_like(tensor.data), requires_grad=False)
    logger.debug(f"backward visited {root._node.index + 1} nodes, {len(result)} leaf gradients")
    return result
