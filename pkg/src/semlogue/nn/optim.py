"""Adaptive moment estimation with decoupled weight decay."""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor
from ..config.settings import TrainingDefaults
from ..utils.exceptions import ValidationError

logger = logging.getLogger(__name__)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: List[np.ndarray], max_norm: float) -> Tuple[List[np.ndarray], float]:
    """Rescale ``grads`` so their joint L2 norm is at most ``max_norm``; returns (grads, norm before)."""
    norm = global_norm(grads)
    if norm > max_norm:
        factor = max_norm / (norm + 1e-6)
        grads = [g * factor for g in grads]
    return grads, norm


class AdamW:
    """
    AdamW over named parameters.

    Moments are keyed by parameter name so the state round-trips through a
    checkpoint and resumes the exact update sequence.
    """

    def __init__(
        self,
        named_parameters: Sequence[Tuple[str, Tensor]],
        lr: float = TrainingDefaults.LEARNING_RATE,
        betas: Tuple[float, float] = TrainingDefaults.BETAS,
        eps: float = TrainingDefaults.ADAM_EPS,
        weight_decay: float = TrainingDefaults.WEIGHT_DECAY,
    ) -> None:
        if lr <= 0:
            raise ValidationError("learning rate must be positive")
        self.params: List[Tuple[str, Tensor]] = list(named_parameters)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.params}
        self.v: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.params}

    def step(self, grads: Dict[Tensor, Tensor], clip_norm: Optional[float] = None) -> float:
        """
        Apply one update from a gradient map; missing parameters get a zero gradient.

        Returns the global gradient norm before clipping.
        """
        arrays = [grads[p].data if p in grads else np.zeros_like(p.data) for _, p in self.params]
        if clip_norm is not None:
            arrays, norm = clip_by_global_norm(arrays, clip_norm)
        else:
            norm = global_norm(arrays)

        self.step_count += 1
        beta1, beta2 = self.betas
        correction1 = 1.0 - beta1**self.step_count
        correction2 = 1.0 - beta2**self.step_count
        for (name, param), grad in zip(self.params, arrays):
            m = self.m[name] = beta1 * self.m[name] + (1.0 - beta1) * grad
            v = self.v[name] = beta2 * self.v[name] + (1.0 - beta2) * grad * grad
            if self.weight_decay:
                param.data -= self.lr * self.weight_decay * param.data
            param.data -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
        logger.debug(f"AdamW step {self.step_count}: grad norm {norm:.4e}")
        return norm

    def state_dict(self) -> Dict[str, np.ndarray]:
        state: Dict[str, np.ndarray] = {"step": np.array(self.step_count, dtype=np.int64)}
        for name, _ in self.params:
            state[f"m.{name}"] = self.m[name].copy()
            state[f"v.{name}"] = self.v[name].copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        for name, param in self.params:
            for prefix, store in (("m", self.m), ("v", self.v)):
                key = f"{prefix}.{name}"
                if key not in state:
                    raise ValidationError(f"optimizer state is missing {key}")
                array = np.asarray(state[key])
                if array.shape != param.data.shape:
                    raise ValidationError(f"optimizer state {key} has shape {list(array.shape)}")
                store[name] = array.astype(param.data.dtype, copy=True)
        self.step_count = int(state["step"])
