"""Neural network modules: transformer generator, baseline estimator, optimizer."""

from .bse import BaselineEstimator
from .module import Module
from .optim import AdamW, clip_by_global_norm, global_norm
from .transformer import DialogueTransformer, pad_batch, teacher_forcing_pair

__all__ = [
    "AdamW",
    "BaselineEstimator",
    "DialogueTransformer",
    "Module",
    "clip_by_global_norm",
    "global_norm",
    "pad_batch",
    "teacher_forcing_pair",
]
