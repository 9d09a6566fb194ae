"""Pytest configuration and fixtures for semlogue tests."""

import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Generator, List

import pytest

# Add src directory to Python path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from semlogue.models.configs import ExperimentConfig, ModelConfig
from semlogue.models.dialogue import Dialogue, TrainingExample, Turn
from semlogue.models.vocab import Vocab
from semlogue.services.corpus_service import CorpusService
from semlogue.services.embedding_service import HashedEmbedder
from semlogue.services.file_service import FileService
from semlogue.services.synthetic import SyntheticCorpusGenerator
from semlogue.utils.logging_config import LoggingConfig

# Small enough for fast steps, large enough to hold the synthetic contexts
TINY_MODEL = {
    "embed_dim": 16,
    "encoder_layers": 1,
    "decoder_layers": 1,
    "heads": 2,
    "ff_dim": 32,
    "max_source_length": 64,
    "max_target_length": 24,
}


def tiny_config(variant: str = "ce", **train: object) -> ExperimentConfig:
    """Experiment config for the tiny model on the hashed provider."""
    train_settings = {"learning_rate": 1e-2, "batch_size": 4, "epochs": 1, "seed": 3, "decode_margin": 2}
    train_settings.update(train)
    return ExperimentConfig.from_dict(
        {
            "model": dict(TINY_MODEL),
            "train": train_settings,
            "loss": {"variant": variant, "bse_hidden": 8},
            "provider": {"kind": "hashed", "dim": 4096},
            "corpus": {"min_freq": 1},
        }
    )


@pytest.fixture(scope="session", autouse=True)
def setup_test_logging():
    """Disable logging during tests to reduce noise."""
    LoggingConfig.disable_logging()
    yield
    LoggingConfig.enable_logging()


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files."""
    temp_dir = Path(tempfile.mkdtemp())
    try:
        yield temp_dir
    finally:
        shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def file_service(temp_dir: Path) -> FileService:
    """Create a FileService instance with temporary directory."""
    return FileService(str(temp_dir))


@pytest.fixture
def sample_dialogue() -> Dialogue:
    """A short two-domain dialogue with three system turns."""
    return Dialogue(
        dialogue_id="d-001",
        domains=["restaurant", "taxi"],
        turns=[
            Turn("user", "I need a cheap place to eat."),
            Turn("system", "Golden House is cheap."),
            Turn("user", "Book it for two."),
            Turn("system", "Done, booked for two."),
            Turn("user", "And a taxi at 5pm."),
            Turn("system", "Your taxi is booked."),
        ],
    )


@pytest.fixture
def synthetic_dialogues() -> List[Dialogue]:
    """Twelve seeded synthetic dialogues."""
    return SyntheticCorpusGenerator(seed=0).generate(12)


@pytest.fixture
def synthetic_examples(synthetic_dialogues: List[Dialogue]) -> List[TrainingExample]:
    """Training examples of the synthetic dialogues."""
    return CorpusService().build_examples(synthetic_dialogues)


@pytest.fixture
def synthetic_vocab(synthetic_dialogues: List[Dialogue]) -> Vocab:
    """Vocabulary over every synthetic dialogue, no frequency cut-off."""
    return CorpusService().build_vocab(synthetic_dialogues, max_size=1000, min_freq=1)


@pytest.fixture
def tiny_model_config(synthetic_vocab: Vocab) -> ModelConfig:
    """Tiny model shape sized to the synthetic vocabulary."""
    return ModelConfig(vocab_size=len(synthetic_vocab), **TINY_MODEL)


@pytest.fixture
def make_config():
    """Factory for tiny experiment configs: ``make_config(variant, **train_overrides)``."""
    return tiny_config


@pytest.fixture
def hashed_provider() -> HashedEmbedder:
    """Hashed embedder with a small table."""
    return HashedEmbedder(dim=4096)
