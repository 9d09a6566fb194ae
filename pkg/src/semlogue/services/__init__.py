"""Service layer for semlogue."""

from .checkpoint_service import CheckpointService, CheckpointState
from .converters import DatasetConverter
from .corpus_service import CorpusReport, CorpusService, CorpusSplit, serialize_context
from .embedding_service import EmbeddingProvider, HashedEmbedder, IntrinsicEmbedder, RemoteEmbedder, create_provider
from .experiment_service import ExperimentReport, ExperimentService
from .file_service import FileService
from .loss_service import LossComputer
from .metrics_service import MetricsService
from .scoring_service import ScoreTriple, ScoringService
from .synthetic import SyntheticCorpusGenerator
from .trainer_service import TrainerService, evaluate_corpus

__all__ = [
    "CheckpointService",
    "CheckpointState",
    "DatasetConverter",
    "CorpusReport",
    "CorpusService",
    "CorpusSplit",
    "serialize_context",
    "EmbeddingProvider",
    "HashedEmbedder",
    "IntrinsicEmbedder",
    "RemoteEmbedder",
    "create_provider",
    "ExperimentReport",
    "ExperimentService",
    "FileService",
    "LossComputer",
    "MetricsService",
    "ScoreTriple",
    "ScoringService",
    "SyntheticCorpusGenerator",
    "TrainerService",
    "evaluate_corpus",
]
