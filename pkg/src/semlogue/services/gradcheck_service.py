"""Finite-difference check of every loss variant on a micro transformer."""

import logging
from typing import Optional

import numpy as np

from ..autodiff import GradReport, Tensor, grad_check
from ..config.settings import Numerics, SpecialTokens
from ..models.configs import LossConfig, ModelConfig
from ..nn import BaselineEstimator, DialogueTransformer, pad_batch, teacher_forcing_pair
from .loss_service import LossComputer

logger = logging.getLogger(__name__)

MICRO_VOCAB = 50
MICRO_ESTIMATOR_HIDDEN = 8


def micro_model_config(seed: int = 0, architecture: str = "encoder-decoder") -> ModelConfig:
    """Vocab 50, embed 16, one layer each side, two heads, float64."""
    return ModelConfig(
        vocab_size=MICRO_VOCAB,
        embed_dim=16,
        encoder_layers=1,
        decoder_layers=1,
        heads=2,
        ff_dim=32,
        max_source_length=16,
        max_target_length=16,
        architecture=architecture,
        dtype="float64",
        seed=seed,
    )


def check_loss_gradients(
    variant: str,
    seed: int = 0,
    lambda_: float = 0.5,
    sigma: float = 1.0,
    eps: float = Numerics.GRADCHECK_EPS,
    tolerance: float = Numerics.GRADCHECK_TOLERANCE,
    entries_per_param: Optional[int] = None,
    architecture: str = "encoder-decoder",
) -> GradReport:
    """
    Gradient check of ``variant`` w.r.t. every model and estimator parameter.

    The batch (two examples of unequal length), the Contanic constants and the
    estimator snapshot seen by L_SCL are drawn once from ``seed`` and held
    fixed, so the loss is a deterministic function of the parameters.
    """
    rng = np.random.default_rng(seed)
    first = len(SpecialTokens.RESERVED)
    sources = [list(rng.integers(first, MICRO_VOCAB, size=5)), list(rng.integers(first, MICRO_VOCAB, size=3))]
    golds = [list(rng.integers(first, MICRO_VOCAB, size=3)), list(rng.integers(first, MICRO_VOCAB, size=2))]
    pairs = [teacher_forcing_pair(g) for g in golds]
    prefixes = [p for p, _ in pairs]
    targets, keep = pad_batch([t for _, t in pairs])
    scores = rng.uniform(0.0, 1.0, size=len(golds))

    config = LossConfig(variant=variant, lambda_=lambda_, sigma=sigma, bse_hidden=MICRO_ESTIMATOR_HIDDEN)
    model = DialogueTransformer(micro_model_config(seed, architecture))
    named = list(model.named_parameters("model."))
    estimator = None
    frozen = None
    if config.uses_estimator:
        estimator = BaselineEstimator(MICRO_VOCAB, MICRO_ESTIMATOR_HIDDEN, seed=seed + 1)
        frozen = estimator.frozen_copy()
        named += list(estimator.named_parameters("estimator."))
    computer = LossComputer(config, estimator)

    def loss() -> Tensor:
        probs = model.forward_teacher_forced(sources, prefixes)
        total, _ = computer.compute(probs, targets, keep, None if variant == "ce" else scores, scl_estimator=frozen)
        return total

    logger.info(f"Gradient check of {variant} over {len(named)} parameter tensors (seed {seed})")
    return grad_check(
        loss,
        [p for _, p in named],
        eps=eps,
        tolerance=tolerance,
        entries_per_param=entries_per_param,
        seed=seed,
        names=[n for n, _ in named],
    )
