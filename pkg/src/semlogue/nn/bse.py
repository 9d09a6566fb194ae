"""Baseline estimator: predicted distributions to a score in (0, 1)."""

from __future__ import annotations

import copy

import numpy as np

from ..autodiff import Tensor, as_tensor
from .layers import Linear
from .module import Module


class BaselineEstimator(Module):
    """
    Two-layer network regressing the Contanic score from the generator's output.

    The input is the per-example mean of the predicted distributions over
    non-pad target positions; hidden ReLU layer; sigmoid output.
    """

    def __init__(self, vocab_size: int, hidden: int, seed: int, dtype: str = "float64") -> None:
        super().__init__()
        dt = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.vocab_size = vocab_size
        self.hidden = self.add_module("hidden", Linear(vocab_size, hidden, rng, dt))
        self.output = self.add_module("output", Linear(hidden, 1, rng, dt))

    def __call__(self, distributions: Tensor, keep: np.ndarray) -> Tensor:
        """Scores [batch] for distributions [batch, tgt_len, vocab] and keep mask [batch, tgt_len]."""
        weights = np.asarray(keep, dtype=distributions.dtype)
        counts = np.maximum(weights.sum(axis=1), 1.0)
        scale = (weights / counts[:, None])[..., None]
        pooled = (distributions * as_tensor(scale)).sum(axis=1)
        batch = distributions.shape[0]
        return self.output(self.hidden(pooled).relu()).reshape(batch).sigmoid()

    def frozen_copy(self) -> BaselineEstimator:
        """Constant snapshot; gradients through it stop at its input."""
        clone = copy.deepcopy(self)
        for tensor in clone.parameters():
            tensor.requires_grad = False
        return clone
