"""Corpus ingestion, context serialization, vocabulary and splitting."""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..config.messages import ErrorMessages
from ..config.settings import CorpusDefaults, SpecialTokens
from ..models.dialogue import Dialogue, TrainingExample, Turn
from ..models.vocab import Vocab
from ..utils.exceptions import CorpusError, FileOperationError, ValidationError
from .file_service import FileService
from .tokenizer import tokenize


@dataclass
class CorpusReport:
    """Outcome of reading a corpus file."""

    path: str
    valid: int = 0
    errors: List[Tuple[int, str]] = field(default_factory=list)

    def add_error(self, line: int, message: str) -> None:
        self.errors.append((line, message))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "valid": self.valid,
            "errors": [{"line": line, "message": message} for line, message in self.errors],
        }


@dataclass
class CorpusSplit:
    """Dialogue-level train/validation/test partition."""

    train: List[Dialogue]
    validation: List[Dialogue]
    test: List[Dialogue]

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)

    def to_dict(self) -> Dict[str, List[str]]:
        return {
            "train": [d.dialogue_id for d in self.train],
            "validation": [d.dialogue_id for d in self.validation],
            "test": [d.dialogue_id for d in self.test],
        }


def _wrap(turn: Turn) -> str:
    if turn.is_system:
        return f"{SpecialTokens.SYSTEM_OPEN} {turn.text} {SpecialTokens.SYSTEM_CLOSE}"
    return f"{SpecialTokens.USER_OPEN} {turn.text} {SpecialTokens.USER_CLOSE}"


def serialize_context(dialogue: Dialogue, turn_index: int, window: int = CorpusDefaults.CONTEXT_WINDOW) -> str:
    """
    Serialize the context that precedes the system turn at ``turn_index``.

    Layout: ``<domain> d1, d2 <domain> <history> ...up to window turns...
    <history> <u> current </u>``. The current utterance is the turn directly
    before the target; the history holds at most ``window`` turns before that,
    or STARTOFDIALOGUE when there are none.
    """
    if window < 0:
        raise ValidationError("context window must be non-negative")
    if turn_index <= 0 or turn_index >= len(dialogue.turns):
        raise ValidationError(f"turn_index {turn_index} has no preceding turn in dialogue {dialogue.dialogue_id}")
    if not dialogue.turns[turn_index].is_system:
        raise ValidationError(f"turn {turn_index} of dialogue {dialogue.dialogue_id} is not a system turn")

    current = dialogue.turns[turn_index - 1]
    history = dialogue.turns[max(0, turn_index - 1 - window) : turn_index - 1]

    parts = [SpecialTokens.DOMAIN]
    if dialogue.domains:
        parts.append(", ".join(dialogue.domains))
    parts.append(SpecialTokens.DOMAIN)
    parts.append(SpecialTokens.HISTORY)
    if history:
        parts.extend(_wrap(turn) for turn in history)
    else:
        parts.append(SpecialTokens.START_OF_DIALOGUE)
    parts.append(SpecialTokens.HISTORY)
    parts.append(_wrap(current))
    return " ".join(parts)


def build_vocab(
    texts: Iterable[str],
    max_size: int = CorpusDefaults.VOCAB_MAX_SIZE,
    min_freq: int = CorpusDefaults.MIN_FREQ,
) -> Vocab:
    """
    Keep the ``max_size`` most frequent tokens seen at least ``min_freq`` times.

    Frequency ties are broken lexicographically; reserved tokens are never
    counted and always occupy ids 0..k.
    """
    reserved = set(SpecialTokens.RESERVED)
    counts: Counter = Counter()
    for text in texts:
        counts.update(tok for tok in tokenize(text) if tok not in reserved)
    ranked = sorted((tok for tok, n in counts.items() if n >= min_freq), key=lambda t: (-counts[t], t))
    return Vocab(list(SpecialTokens.RESERVED) + ranked[:max_size])


def split_sizes(count: int) -> Tuple[int, int, int]:
    """Train, validation and test counts; the held-out parts round to nearest and train takes the rest."""
    ratios = CorpusDefaults.SPLIT_RATIOS
    total = sum(ratios)
    n_val, n_test = (int(np.floor(r / total * count + 0.5)) for r in ratios[1:])
    return count - n_val - n_test, n_val, n_test


def split_dialogues(dialogues: Sequence[Dialogue], seed: int) -> CorpusSplit:
    """Seeded dialogue-level split; each part keeps the input order."""
    if len(dialogues) < CorpusDefaults.MIN_DIALOGUES:
        raise CorpusError(
            ErrorMessages.TOO_FEW_DIALOGUES.format(minimum=CorpusDefaults.MIN_DIALOGUES, count=len(dialogues))
        )
    n_train, n_val, _ = split_sizes(len(dialogues))
    order = np.random.default_rng(seed).permutation(len(dialogues))
    parts = (
        np.sort(order[:n_train]),
        np.sort(order[n_train : n_train + n_val]),
        np.sort(order[n_train + n_val :]),
    )
    train, validation, test = ([dialogues[i] for i in part] for part in parts)
    return CorpusSplit(train=train, validation=validation, test=test)


class CorpusService:
    """Service turning corpus files into vocabularies and training examples."""

    def __init__(self, window: int = CorpusDefaults.CONTEXT_WINDOW) -> None:
        """Initialize the corpus service with a context window."""
        self.logger = logging.getLogger(__name__)
        self.window = window

    def load_jsonl(self, path: Path) -> Tuple[List[Dialogue], CorpusReport]:
        """
        Read one dialogue per line.

        Malformed lines are skipped and listed in the report with their line
        numbers. A file with no valid dialogue is a CorpusError.
        """
        path = Path(path)
        if not path.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=path))

        report = CorpusReport(path=str(path))
        dialogues: List[Dialogue] = []
        reader = FileService(str(path.parent))
        try:
            for number, line in reader.iter_jsonl_lines(path):
                try:
                    dialogues.append(Dialogue.from_dict(json.loads(line)))
                except json.JSONDecodeError as e:
                    report.add_error(number, f"invalid JSON: {e.msg}")
                except ValidationError as e:
                    report.add_error(number, str(e))
        except FileOperationError as e:
            raise CorpusError(str(e), report) from e

        report.valid = len(dialogues)
        for number, message in report.errors:
            self.logger.warning(f"{path}:{number}: skipped malformed dialogue ({message})")
        if not dialogues:
            raise CorpusError(ErrorMessages.NO_VALID_DIALOGUES.format(path=path, errors=len(report.errors)), report)
        self.logger.info(f"Loaded {len(dialogues)} dialogues from {path} ({len(report.errors)} skipped)")
        return dialogues, report

    def write_jsonl(self, path: Path, dialogues: Iterable[Dialogue]) -> int:
        path = Path(path)
        return FileService(str(path.parent)).write_jsonl_file(path, (d.to_dict() for d in dialogues))

    def build_examples(self, dialogues: Iterable[Dialogue]) -> List[TrainingExample]:
        """One example per system turn that has a preceding turn, in corpus order."""
        examples = []
        for dialogue in dialogues:
            for index in dialogue.system_turn_indices():
                examples.append(
                    TrainingExample(
                        context_text=serialize_context(dialogue, index, self.window),
                        gold_text=dialogue.turns[index].text,
                        dialogue_id=dialogue.dialogue_id,
                        turn_index=index,
                    )
                )
        return examples

    def build_vocab(self, dialogues: Iterable[Dialogue], max_size: int, min_freq: int) -> Vocab:
        texts: List[str] = []
        for dialogue in dialogues:
            texts.extend(dialogue.domains)
            texts.extend(turn.text for turn in dialogue.turns)
        vocab = build_vocab(texts, max_size=max_size, min_freq=min_freq)
        self.logger.info(f"Vocabulary: {len(vocab)} entries ({vocab.reserved_count} reserved)")
        return vocab

    def split(self, dialogues: Sequence[Dialogue], seed: int) -> CorpusSplit:
        corpus_split = split_dialogues(dialogues, seed)
        self.logger.info("Split sizes train/validation/test = %d/%d/%d" % corpus_split.sizes())
        return corpus_split


def encode_text(vocab: Vocab, text: str) -> List[int]:
    return vocab.encode(tokenize(text))
