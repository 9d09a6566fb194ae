"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..config.settings import Numerics
from ..utils.exceptions import GradCheckError, ValidationError
from .tensor import TapeGraph, Tensor, backward, no_grad

logger = logging.getLogger(__name__)


@dataclass
class ParameterCheck:
    """Comparison result for one parameter tensor."""

    name: str
    checked: int = 0
    excluded: int = 0
    failed: int = 0
    max_abs_diff: float = 0.0
    max_rel_diff: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "checked": self.checked,
            "excluded": self.excluded,
            "failed": self.failed,
            "max_abs_diff": self.max_abs_diff,
            "max_rel_diff": self.max_rel_diff,
        }


@dataclass
class GradReport:
    """Analytic versus numeric gradient comparison over a set of parameters."""

    tolerance: float
    eps: float
    parameters: List[ParameterCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.parameters)

    @property
    def max_abs_diff(self) -> float:
        return max((p.max_abs_diff for p in self.parameters), default=0.0)

    @property
    def max_rel_diff(self) -> float:
        return max((p.max_rel_diff for p in self.parameters), default=0.0)

    @property
    def excluded(self) -> int:
        return sum(p.excluded for p in self.parameters)

    @property
    def checked(self) -> int:
        return sum(p.checked for p in self.parameters)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "eps": self.eps,
            "max_abs_diff": self.max_abs_diff,
            "max_rel_diff": self.max_rel_diff,
            "checked": self.checked,
            "excluded": self.excluded,
            "parameters": [p.to_dict() for p in self.parameters],
        }


def relative_difference(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, 1e-8)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), Numerics.RELATIVE_FLOOR)


def grad_check(
    function: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = Numerics.GRADCHECK_EPS,
    tolerance: float = Numerics.GRADCHECK_TOLERANCE,
    abs_floor: float = Numerics.GRADCHECK_ABS_FLOOR,
    entries_per_param: Optional[int] = None,
    seed: int = 0,
    names: Optional[Sequence[str]] = None,
) -> GradReport:
    """
    Compare analytic gradients of ``function`` against central differences.

    Args:
        function: Zero-argument graph builder returning a scalar tensor; it is
            called inside a tape for the analytic pass and without one for
            every numeric evaluation.
        params: Leaf tensors to check; their data is perturbed in place and
            restored.
        eps: Finite-difference step.
        tolerance: Relative tolerance per entry.
        abs_floor: Entries whose absolute difference is below this also pass.
        entries_per_param: Check a seeded random subset of entries per
            parameter instead of all of them.
        seed: Seed of the subset selection.
        names: Optional display names for the parameters.

    Returns:
        GradReport with per-parameter maxima and failure counts. Entries that
        fail at a kink (one-sided slopes disagree) are counted as excluded.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")

    with TapeGraph() as tape:
        root = function()
    if root.size != 1:
        raise GradCheckError(f"function must return a scalar, got shape {list(root.shape)}")
    analytic = backward(tape, root, leaves=params) if root._node is not None else {}

    base = _evaluate(function)
    if _evaluate(function) != base:
        raise GradCheckError("function is not deterministic: two forward evaluations disagree")

    rng = np.random.default_rng(seed)
    report = GradReport(tolerance=tolerance, eps=eps)
    for position, param in enumerate(params):
        label = (names[position] if names else None) or param.name or f"param_{position}"
        check = ParameterCheck(name=label)
        grad = analytic[param].data if param in analytic else np.zeros_like(param.data)

        flat_count = param.data.size
        if entries_per_param is not None and entries_per_param < flat_count:
            indices = np.sort(rng.choice(flat_count, size=entries_per_param, replace=False))
        else:
            indices = np.arange(flat_count)

        for flat_index in indices:
            index = np.unravel_index(int(flat_index), param.data.shape)
            original = param.data[index]
            param.data[index] = original + eps
            plus = _evaluate(function)
            param.data[index] = original - eps
            minus = _evaluate(function)
            param.data[index] = original

            numeric = (plus - minus) / (2.0 * eps)
            value = float(grad[index])
            abs_diff = abs(value - numeric)
            rel_diff = relative_difference(value, numeric)
            check.checked += 1

            if rel_diff <= tolerance or abs_diff <= abs_floor:
                check.max_abs_diff = max(check.max_abs_diff, abs_diff)
                # Near-zero entries passing on the absolute floor carry no relative signal
                if rel_diff <= tolerance:
                    check.max_rel_diff = max(check.max_rel_diff, rel_diff)
                continue
            if _is_kink(base, plus, minus, eps, tolerance):
                check.excluded += 1
                logger.debug(f"{label}{list(index)}: excluded non-differentiable point")
                continue
            check.failed += 1
            check.max_abs_diff = max(check.max_abs_diff, abs_diff)
            check.max_rel_diff = max(check.max_rel_diff, rel_diff)
            logger.debug(f"{label}{list(index)}: analytic={value:.6e} numeric={numeric:.6e}")

        report.parameters.append(check)

    logger.info(
        f"Gradient check: {report.checked} entries, max rel {report.max_rel_diff:.3e}, "
        f"excluded {report.excluded}, passed={report.passed}"
    )
    return report


def _evaluate(function: Callable[[], Tensor]) -> float:
    with no_grad():
        return float(function().data.reshape(-1)[0])


def _is_kink(base: float, plus: float, minus: float, eps: float, tolerance: float) -> bool:
    right = (plus - base) / eps
    left = (base - minus) / eps
    return relative_difference(right, left) > max(tolerance, 1e-2)
