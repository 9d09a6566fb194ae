"""Checkpoint save/load as a single self-describing ``.npz`` archive."""

import json
import logging
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..config.settings import CHECKPOINT_FORMAT_VERSION
from ..models.configs import ModelConfig
from ..models.vocab import Vocab
from ..nn.transformer import DialogueTransformer
from ..utils.exceptions import CheckpointError, ValidationError

METADATA_KEY = "__metadata__"

# Array groups inside the archive, stored as "<group>/<name>"
GROUPS = ("model", "estimator", "optimizer", "provider")


@dataclass
class CheckpointState:
    """
    Everything needed to restore a model or resume a run.

    ``epoch`` and ``batch_index`` name the next batch to run: an end-of-epoch
    checkpoint has ``batch_index == 0`` and ``epoch`` set to the number of
    completed epochs.
    """

    model_config: ModelConfig
    vocab: Vocab
    model: Dict[str, np.ndarray]
    estimator: Dict[str, np.ndarray] = field(default_factory=dict)
    optimizer: Dict[str, np.ndarray] = field(default_factory=dict)
    provider: Dict[str, np.ndarray] = field(default_factory=dict)
    experiment: Dict[str, Any] = field(default_factory=dict)
    epoch: int = 0
    batch_index: int = 0
    step: int = 0
    seed: int = 0
    truncation_count: int = 0

    def metadata(self) -> Dict[str, Any]:
        return {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "model_config": self.model_config.to_dict(),
            "vocab": self.vocab.to_dict(),
            "experiment": self.experiment,
            "epoch": self.epoch,
            "batch_index": self.batch_index,
            "step": self.step,
            "seed": self.seed,
            "truncation_count": self.truncation_count,
        }


class CheckpointService:
    """Writes and restores CheckpointState archives."""

    def __init__(self) -> None:
        """Initialize the checkpoint service."""
        self.logger = logging.getLogger(__name__)

    def save(self, path: Path, state: CheckpointState) -> Path:
        """Write ``state`` to ``path`` atomically (temporary file, then rename)."""
        path = Path(path)
        arrays: Dict[str, np.ndarray] = {METADATA_KEY: np.array(json.dumps(state.metadata()))}
        for group in GROUPS:
            for name, array in getattr(state, group).items():
                arrays[f"{group}/{name}"] = np.asarray(array)

        temporary = path.with_name(path.name + ".tmp")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(temporary, "wb") as f:
                np.savez(f, **arrays)
            os.replace(temporary, path)
        except OSError as e:
            raise CheckpointError(f"Failed to write checkpoint {path}: {e}") from e
        self.logger.info(f"Saved checkpoint {path} (step {state.step}, epoch {state.epoch})")
        return path

    def load(self, path: Path, expected_vocab_hash: Optional[str] = None) -> CheckpointState:
        """
        Read a checkpoint written by ``save``.

        Raises CheckpointError when the file is missing, unreadable, from another
        format version, or built on a vocabulary other than ``expected_vocab_hash``.
        """
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"Checkpoint not found: {path}")
        try:
            with np.load(path, allow_pickle=False) as archive:
                arrays = {key: archive[key] for key in archive.files}
        except (OSError, ValueError, EOFError, zipfile.BadZipFile) as e:
            raise CheckpointError(f"Corrupted checkpoint {path}: {e}") from e

        if METADATA_KEY not in arrays:
            raise CheckpointError(f"Corrupted checkpoint {path}: no metadata record")
        try:
            metadata = json.loads(str(arrays.pop(METADATA_KEY)))
        except json.JSONDecodeError as e:
            raise CheckpointError(f"Corrupted checkpoint {path}: unreadable metadata ({e})") from e

        version = metadata.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(
                f"Checkpoint {path} has format version {version}; this build reads {CHECKPOINT_FORMAT_VERSION}"
            )

        try:
            vocab = Vocab.from_dict(metadata["vocab"])
            model_config = ModelConfig.from_dict(metadata["model_config"])
        except (KeyError, ValidationError) as e:
            raise CheckpointError(f"Corrupted checkpoint {path}: {e}") from e
        if expected_vocab_hash is not None and vocab.hash != expected_vocab_hash:
            raise CheckpointError(f"Checkpoint {path} was trained on a different vocabulary (hash {vocab.hash[:12]})")

        groups: Dict[str, Dict[str, np.ndarray]] = {group: {} for group in GROUPS}
        for key, array in arrays.items():
            group, _, name = key.partition("/")
            if group not in groups or not name:
                raise CheckpointError(f"Corrupted checkpoint {path}: unexpected entry {key!r}")
            groups[group][name] = array

        state = CheckpointState(
            model_config=model_config,
            vocab=vocab,
            experiment=metadata.get("experiment", {}),
            epoch=int(metadata.get("epoch", 0)),
            batch_index=int(metadata.get("batch_index", 0)),
            step=int(metadata.get("step", 0)),
            seed=int(metadata.get("seed", 0)),
            truncation_count=int(metadata.get("truncation_count", 0)),
            **groups,
        )
        self.logger.info(f"Loaded checkpoint {path} (step {state.step}, epoch {state.epoch})")
        return state

    def restore_model(self, state: CheckpointState) -> DialogueTransformer:
        """Fresh model of the saved shape carrying the saved parameters."""
        model = DialogueTransformer(state.model_config)
        try:
            model.load_state_dict(state.model)
        except ValidationError as e:
            raise CheckpointError(f"Checkpoint parameters do not fit the saved config: {e}") from e
        model.truncation_count = state.truncation_count
        return model
