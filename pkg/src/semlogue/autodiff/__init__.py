"""Reverse-mode automatic differentiation on numpy arrays."""

from .tensor import Function, Node, TapeGraph, Tensor, as_tensor, backward, no_grad
from .functions import apply_primitive, concat, embedding_lookup, gather, layer_norm, softmax_nll
from .gradcheck import GradReport, ParameterCheck, grad_check, relative_difference

__all__ = [
    "Function",
    "Node",
    "TapeGraph",
    "Tensor",
    "as_tensor",
    "backward",
    "no_grad",
    "apply_primitive",
    "concat",
    "embedding_lookup",
    "gather",
    "layer_norm",
    "softmax_nll",
    "GradReport",
    "ParameterCheck",
    "grad_check",
    "relative_difference",
]
