"""Data models for semlogue."""

from .configs import (
    ContanicWeights,
    CorpusConfig,
    DialuationWeights,
    ExperimentConfig,
    LossConfig,
    ModelConfig,
    ProviderConfig,
    TrainConfig,
)
from .dialogue import Dialogue, TrainingExample, Turn
from .reports import EpochRecord, ExampleScore, LossBreakdown, RunLog, ScoreReport, StepRecord
from .vocab import Vocab

__all__ = [
    "ContanicWeights",
    "CorpusConfig",
    "DialuationWeights",
    "ExperimentConfig",
    "LossConfig",
    "ModelConfig",
    "ProviderConfig",
    "TrainConfig",
    "Dialogue",
    "TrainingExample",
    "Turn",
    "EpochRecord",
    "ExampleScore",
    "LossBreakdown",
    "RunLog",
    "ScoreReport",
    "StepRecord",
    "Vocab",
]
