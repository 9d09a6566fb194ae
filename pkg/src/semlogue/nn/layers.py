"""Transformer building blocks on the tensor core."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..autodiff import Tensor, as_tensor, embedding_lookup, layer_norm
from ..config.settings import Numerics
from .module import Module, uniform_init


def sinusoidal_table(length: int, dim: int, dtype: np.dtype = np.float64) -> np.ndarray:
    """Fixed sinusoidal position table of shape [length, dim]."""
    positions = np.arange(length)[:, None]
    rates = np.power(10000.0, -(2 * (np.arange(dim) // 2)) / dim)
    angles = positions * rates[None, :]
    table = np.where(np.arange(dim)[None, :] % 2 == 0, np.sin(angles), np.cos(angles))
    return table.astype(dtype)


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype: np.dtype, bias: bool = True) -> None:
        super().__init__()
        self.weight = self.add_parameter("weight", uniform_init(rng, (in_dim, out_dim), in_dim, dtype))
        self.bias: Optional[Tensor] = None
        if bias:
            self.bias = self.add_parameter("bias", uniform_init(rng, (out_dim,), in_dim, dtype))

    def __call__(self, x: Tensor) -> Tensor:
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class Embedding(Module):
    def __init__(self, count: int, dim: int, rng: np.random.Generator, dtype: np.dtype) -> None:
        super().__init__()
        self.weight = self.add_parameter("weight", uniform_init(rng, (count, dim), dim, dtype))

    def __call__(self, ids: np.ndarray) -> Tensor:
        return embedding_lookup(self.weight, ids)


class LayerNorm(Module):
    def __init__(self, dim: int, dtype: np.dtype) -> None:
        super().__init__()
        self.gamma = self.add_parameter("gamma", np.ones(dim, dtype=dtype))
        self.beta = self.add_parameter("beta", np.zeros(dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


class FeedForward(Module):
    def __init__(self, dim: int, hidden: int, rng: np.random.Generator, dtype: np.dtype) -> None:
        super().__init__()
        self.inner = self.add_module("inner", Linear(dim, hidden, rng, dtype))
        self.outer = self.add_module("outer", Linear(hidden, dim, rng, dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x).relu())


class MultiHeadAttention(Module):
    """
    Scaled dot-product attention over ``heads`` subspaces.

    ``keep`` is a boolean array broadcastable to [batch, queries, keys]. Dropped
    keys get an additive -1e9 before the softmax and the weights are multiplied
    by ``keep`` afterwards, so a query with no visible key attends to nothing.
    The key projection carries no bias: it would shift every score of a query
    by the same amount.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, dtype: np.dtype) -> None:
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.query = self.add_module("query", Linear(dim, dim, rng, dtype))
        self.key = self.add_module("key", Linear(dim, dim, rng, dtype, bias=False))
        self.value = self.add_module("value", Linear(dim, dim, rng, dtype))
        self.output = self.add_module("output", Linear(dim, dim, rng, dtype))

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def __call__(self, x: Tensor, memory: Tensor, keep: np.ndarray) -> Tensor:
        batch, length, dim = x.shape
        q = self._split(self.query(x))
        k = self._split(self.key(memory)).transpose(0, 1, 3, 2)
        v = self._split(self.value(memory))

        keep = np.asarray(keep, dtype=bool)[:, None, :, :]
        additive = np.where(keep, 0.0, Numerics.MASK_VALUE).astype(x.dtype)
        scores = (q @ k) * (1.0 / np.sqrt(self.head_dim)) + as_tensor(additive)
        weights = scores.softmax(axis=-1) * as_tensor(keep.astype(x.dtype))

        context = (weights @ v).transpose(0, 2, 1, 3).reshape(batch, length, dim)
        return self.output(context)


class EncoderLayer(Module):
    """Post-norm self-attention block."""

    def __init__(self, dim: int, heads: int, ff_dim: int, rng: np.random.Generator, dtype: np.dtype) -> None:
        super().__init__()
        self.attention = self.add_module("attention", MultiHeadAttention(dim, heads, rng, dtype))
        self.norm1 = self.add_module("norm1", LayerNorm(dim, dtype))
        self.feed_forward = self.add_module("feed_forward", FeedForward(dim, ff_dim, rng, dtype))
        self.norm2 = self.add_module("norm2", LayerNorm(dim, dtype))

    def __call__(self, x: Tensor, keep: np.ndarray) -> Tensor:
        x = self.norm1(x + self.attention(x, x, keep))
        return self.norm2(x + self.feed_forward(x))


class DecoderLayer(Module):
    """Post-norm masked self-attention, optional cross-attention, then feed-forward."""

    def __init__(
        self, dim: int, heads: int, ff_dim: int, rng: np.random.Generator, dtype: np.dtype, cross: bool = True
    ) -> None:
        super().__init__()
        self.self_attention = self.add_module("self_attention", MultiHeadAttention(dim, heads, rng, dtype))
        self.norm1 = self.add_module("norm1", LayerNorm(dim, dtype))
        self.cross_attention: Optional[MultiHeadAttention] = None
        if cross:
            self.cross_attention = self.add_module("cross_attention", MultiHeadAttention(dim, heads, rng, dtype))
            self.norm_cross = self.add_module("norm_cross", LayerNorm(dim, dtype))
        self.feed_forward = self.add_module("feed_forward", FeedForward(dim, ff_dim, rng, dtype))
        self.norm2 = self.add_module("norm2", LayerNorm(dim, dtype))

    def __call__(
        self,
        x: Tensor,
        self_keep: np.ndarray,
        memory: Optional[Tensor] = None,
        memory_keep: Optional[np.ndarray] = None,
    ) -> Tensor:
        x = self.norm1(x + self.self_attention(x, x, self_keep))
        if self.cross_attention is not None:
            x = self.norm_cross(x + self.cross_attention(x, memory, memory_keep))
        return self.norm2(x + self.feed_forward(x))
