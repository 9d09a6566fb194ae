"""Cross-entropy, Contanic-weighted CE and the SemTextualLogue loss family."""

import logging
from typing import Optional, Tuple, Union

import numpy as np

from ..autodiff import Tensor, as_tensor, gather
from ..models.configs import LossConfig
from ..models.reports import LossBreakdown
from ..nn.bse import BaselineEstimator
from ..utils.exceptions import ValidationError

Scalar = Union[Tensor, float]


def _row_weights(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-position weights 1/count_i on kept positions, and the rows with any kept position."""
    mask = np.asarray(mask, dtype=bool)
    counts = mask.sum(axis=1)
    if not counts.any():
        raise ValidationError("cross-entropy over a batch whose target positions are all padding")
    valid = counts > 0
    weights = np.where(mask, 1.0 / np.maximum(counts, 1)[:, None], 0.0)
    return weights, valid


def _batch_mean(per_example: Tensor, valid: np.ndarray, scale: Optional[np.ndarray] = None) -> Tensor:
    """Mean over valid rows of ``scale * per_example``."""
    weights = valid.astype(per_example.dtype) / valid.sum()
    if scale is not None:
        weights = weights * scale
    return (per_example * as_tensor(weights.astype(per_example.dtype))).sum()


def per_example_cross_entropy(pred_dists: Tensor, gold: np.ndarray, pad_mask: np.ndarray) -> Tuple[Tensor, np.ndarray]:
    """
    Token-mean negative log-likelihood per example, [batch], and the valid-row mask.

    ``pad_mask`` is True on real target positions. Probabilities are clamped at
    1e-12 before the log.
    """
    weights, valid = _row_weights(pad_mask)
    gold = np.where(np.asarray(pad_mask, dtype=bool), np.asarray(gold, dtype=np.int64), 0)
    log_probs = gather(pred_dists, gold).log()
    return -(log_probs * as_tensor(weights.astype(pred_dists.dtype))).sum(axis=1), valid


def cross_entropy(pred_dists: Tensor, gold: np.ndarray, pad_mask: np.ndarray) -> Tensor:
    """
    Batch cross-entropy: the mean over examples of each example's token-mean NLL.

    This is not the mean over all non-pad positions of the batch; the two agree
    only when every example has the same target length. The weighted variants
    equal it exactly at c = 0 and lambda = 1. Pad positions are excluded.
    """
    per_example, valid = per_example_cross_entropy(pred_dists, gold, pad_mask)
    return _batch_mean(per_example, valid)


def _check_scores(scores: np.ndarray, name: str) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(scores)) or scores.min(initial=0.0) < 0.0 or scores.max(initial=0.0) > 1.0:
        raise ValidationError(f"{name} scores must lie in [0, 1]")
    return scores


def weighted_contanic_ce(
    pred_dists: Tensor, gold: np.ndarray, pad_mask: np.ndarray, contanic_scores: np.ndarray
) -> Tensor:
    """mean_i (1 - c_i) * CE_i with the scores as constants."""
    scores = _check_scores(contanic_scores, "contanic")
    per_example, valid = per_example_cross_entropy(pred_dists, gold, pad_mask)
    return _batch_mean(per_example, valid, scale=1.0 - scores)


def bse_forward(pred_dists: Tensor, pad_mask: np.ndarray, bse: BaselineEstimator) -> Tensor:
    """Estimator score per example in (0, 1); pooling ignores pad positions."""
    return bse(pred_dists, pad_mask)


def l_scl(bse_score: Tensor, ce_per_example: Tensor, valid: Optional[np.ndarray] = None) -> Tensor:
    """mean_i (1 - bse_i) * CE_i."""
    valid = np.ones(ce_per_example.shape[0], dtype=bool) if valid is None else valid
    return _batch_mean((1.0 - bse_score) * ce_per_example, valid)


def l_bse(bse_score: Tensor, contanic_score: np.ndarray, valid: Optional[np.ndarray] = None) -> Tensor:
    """mean_i (bse_i - c_i)^2 against the constant Contanic targets."""
    target = as_tensor(np.asarray(contanic_score, dtype=bse_score.dtype).reshape(-1))
    valid = np.ones(bse_score.shape[0], dtype=bool) if valid is None else valid
    return _batch_mean((bse_score - target) ** 2, valid)


def semtextuallogue_total(l_ce: Scalar, l_scl_value: Scalar, l_bse_value: Scalar, lambda_: float, sigma: float) -> Scalar:
    """lambda * L_CE + (1 - lambda) * L_SCL + sigma * L_BSE."""
    if not (0.0 <= lambda_ <= 1.0 and 0.0 <= sigma <= 1.0):
        raise ValidationError("lambda and sigma must lie in [0, 1]")
    return l_ce * lambda_ + l_scl_value * (1.0 - lambda_) + l_bse_value * sigma


class LossComputer:
    """
    Assembles the configured loss variant from a batch of predictions.

    Variants and the breakdown they report:

    - ``ce``: l_total = l_ce
    - ``additive-ce``: l_total = l_ce + mean(contanic); the added constant has
      no gradient
    - ``weighted-semantic-ce`` / ``weighted-semantic-context-ce``:
      l_total = l_scl = mean((1 - c_i) CE_i)
    - ``semantic-reinforcement`` / ``semtextuallogue``:
      l_total = lambda l_ce + (1 - lambda) l_scl + sigma l_bse, where l_scl
      sees the estimator through a frozen copy and l_bse trains the live one
    """

    def __init__(self, config: LossConfig, bse: Optional[BaselineEstimator] = None) -> None:
        if config.uses_estimator and bse is None:
            raise ValidationError(f"variant {config.variant} needs a baseline estimator")
        self.config = config
        self.bse = bse
        self.logger = logging.getLogger(__name__)

    def compute(
        self,
        pred_dists: Tensor,
        targets: np.ndarray,
        pad_mask: np.ndarray,
        contanic_scores: Optional[np.ndarray] = None,
        scl_estimator: Optional[BaselineEstimator] = None,
    ) -> Tuple[Tensor, LossBreakdown]:
        """
        Total loss tensor and its breakdown.

        ``contanic_scores`` are required for every variant except ``ce``; they
        are clamped to [0, 1] here. ``scl_estimator`` overrides the frozen copy
        used inside L_SCL.
        """
        variant = self.config.variant
        per_example, valid = per_example_cross_entropy(pred_dists, targets, pad_mask)
        l_ce = _batch_mean(per_example, valid)

        scores = np.zeros(per_example.shape[0])
        if variant != "ce":
            if contanic_scores is None:
                raise ValidationError(f"variant {variant} needs Contanic scores")
            scores = np.clip(np.asarray(contanic_scores, dtype=np.float64).reshape(-1), 0.0, 1.0)
        contanic_mean = float(scores[valid].mean())

        if variant == "ce":
            total = l_ce
            breakdown = LossBreakdown(l_ce=l_ce.item(), l_total=total.item())
        elif variant == "additive-ce":
            total = l_ce + contanic_mean
            breakdown = LossBreakdown(l_ce=l_ce.item(), l_total=total.item(), contanic_score=contanic_mean)
        elif variant in ("weighted-semantic-ce", "weighted-semantic-context-ce"):
            total = _batch_mean(per_example, valid, scale=1.0 - scores)
            breakdown = LossBreakdown(
                l_ce=l_ce.item(), l_scl=total.item(), l_total=total.item(), contanic_score=contanic_mean
            )
        else:
            live = bse_forward(pred_dists, pad_mask, self.bse)
            frozen = scl_estimator if scl_estimator is not None else self.bse.frozen_copy()
            scl = l_scl(bse_forward(pred_dists, pad_mask, frozen), per_example, valid)
            estimator = l_bse(live, scores, valid)
            total = semtextuallogue_total(l_ce, scl, estimator, self.config.lambda_, self.config.sigma)
            breakdown = LossBreakdown(
                l_ce=l_ce.item(),
                l_scl=scl.item(),
                l_bse=estimator.item(),
                l_total=total.item(),
                contanic_score=contanic_mean,
                bse_score=float(live.data[valid].mean()),
            )
        return total, breakdown
