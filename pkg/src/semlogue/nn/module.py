"""Parameter containers built on the tensor core."""

from __future__ import annotations

from typing import Dict, Iterator, List, Tuple

import numpy as np

from ..autodiff import Tensor
from ..utils.exceptions import ValidationError


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype: np.dtype) -> np.ndarray:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """
    Named tree of parameter tensors.

    Parameters and child modules are registered explicitly and enumerated in
    registration order, which fixes checkpoint layout and optimizer order.
    """

    def __init__(self) -> None:
        self._parameters: Dict[str, Tensor] = {}
        self._modules: Dict[str, Module] = {}

    def add_parameter(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._parameters or name in self._modules:
            raise ValidationError(f"duplicate member name {name!r}")
        tensor = Tensor(data, requires_grad=True, name=name, dtype=data.dtype)
        self._parameters[name] = tensor
        return tensor

    def add_module(self, name: str, module: Module) -> Module:
        if name in self._parameters or name in self._modules:
            raise ValidationError(f"duplicate member name {name!r}")
        self._modules[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._parameters.items():
            yield f"{prefix}{name}", tensor
        for name, module in self._modules.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into the parameters in place; names and shapes must match exactly."""
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ValidationError(f"parameter mismatch: missing {missing}, unexpected {unexpected}")
        for name, tensor in own.items():
            array = np.asarray(state[name])
            if array.shape != tensor.data.shape:
                raise ValidationError(f"{name}: shape {list(array.shape)} != {list(tensor.data.shape)}")
            tensor.data[...] = array.astype(tensor.data.dtype, copy=False)
