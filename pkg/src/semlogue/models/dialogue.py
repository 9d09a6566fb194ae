"""Dialogue, turn and training example models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

from ..config.settings import CorpusDefaults
from ..utils.exceptions import ValidationError


@dataclass
class Turn:
    """One speaker-tagged utterance."""

    speaker: str
    text: str

    def __post_init__(self) -> None:
        """Validate turn data after initialization."""
        if self.speaker not in CorpusDefaults.SPEAKERS:
            raise ValidationError(f"speaker must be one of {CorpusDefaults.SPEAKERS}, got {self.speaker!r}")
        if not isinstance(self.text, str):
            raise ValidationError("turn text must be a string")

    @property
    def is_system(self) -> bool:
        return self.speaker == "system"

    def to_dict(self) -> Dict[str, Any]:
        return {"speaker": self.speaker, "text": self.text}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Turn:
        if not isinstance(data, dict):
            raise ValidationError("turn must be an object")
        if "speaker" not in data or "text" not in data:
            raise ValidationError("turn requires 'speaker' and 'text'")
        return cls(speaker=data["speaker"], text=data["text"])


@dataclass
class Dialogue:
    """
    An ordered list of turns with its domains.

    Speakers are kept as given; strict user/system alternation is not assumed.
    """

    dialogue_id: str
    turns: List[Turn]
    domains: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate dialogue data after initialization."""
        if not isinstance(self.dialogue_id, str) or not self.dialogue_id:
            raise ValidationError("dialogue_id must be a non-empty string")
        if not self.turns:
            raise ValidationError(f"dialogue {self.dialogue_id} has no turns")
        if not all(isinstance(d, str) for d in self.domains):
            raise ValidationError("domains must be strings")

    def __len__(self) -> int:
        return len(self.turns)

    def system_turn_indices(self) -> List[int]:
        """Indices of system turns that have at least one preceding turn."""
        return [i for i, turn in enumerate(self.turns) if i > 0 and turn.is_system]

    def to_dict(self) -> Dict[str, Any]:
        """Convert dialogue to its corpus JSONL record."""
        return {
            "dialogue_id": self.dialogue_id,
            "domains": list(self.domains),
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Dialogue:
        """Create Dialogue from a corpus JSONL record."""
        if not isinstance(data, dict):
            raise ValidationError("record must be a JSON object")
        for key in ("dialogue_id", "turns"):
            if key not in data:
                raise ValidationError(f"missing '{key}'")
        turns = data["turns"]
        if not isinstance(turns, list):
            raise ValidationError("'turns' must be a list")
        domains = data.get("domains", [])
        if not isinstance(domains, list):
            raise ValidationError("'domains' must be a list")
        return cls(
            dialogue_id=str(data["dialogue_id"]),
            turns=[Turn.from_dict(t) for t in turns],
            domains=list(domains),
        )


@dataclass(frozen=True)
class TrainingExample:
    """A serialized context paired with the system response that follows it."""

    context_text: str
    gold_text: str
    dialogue_id: str
    turn_index: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "context": self.context_text,
            "gold": self.gold_text,
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrainingExample:
        return cls(
            context_text=data["context"],
            gold_text=data["gold"],
            dialogue_id=data.get("dialogue_id", ""),
            turn_index=int(data.get("turn_index", 0)),
        )
