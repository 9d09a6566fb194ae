"""Best-effort converters from raw dataset releases into corpus dialogues."""

import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..config.messages import ErrorMessages
from ..models.dialogue import Dialogue, Turn
from ..utils.exceptions import CorpusError, FileOperationError
from .file_service import FileService

_PERSONA_LINE = re.compile(r"^(\d+) (.*)$")


class DatasetConverter:
    """
    Converts MultiWoz 2.2 and PersonaChat (ConvAI2 text) releases.

    Belief states, dialogue acts, personas and candidate lists are dropped.
    """

    FORMATS = ("multiwoz", "personachat")

    def __init__(self) -> None:
        self.logger = logging.getLogger(__name__)

    def convert(self, name: str, path: Path) -> List[Dialogue]:
        if name == "multiwoz":
            return self.convert_multiwoz(Path(path))
        if name == "personachat":
            return self.convert_personachat(Path(path))
        raise CorpusError(ErrorMessages.UNKNOWN_FORMAT.format(name=name))

    def convert_multiwoz(self, path: Path) -> List[Dialogue]:
        """Read one ``dialogues_*.json`` file or every such file under a directory."""
        if not path.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=path))
        files = sorted(path.rglob("dialogues_*.json")) if path.is_dir() else [path]
        dialogues: List[Dialogue] = []
        for file_path in files:
            try:
                records = FileService(str(file_path.parent)).read_json_file(file_path)
            except FileOperationError as e:
                raise CorpusError(str(e)) from e
            if not isinstance(records, list):
                raise CorpusError(f"{file_path}: expected a list of dialogues")
            for record in records:
                dialogue = self._multiwoz_dialogue(record)
                if dialogue is not None:
                    dialogues.append(dialogue)
        self.logger.info(f"Converted {len(dialogues)} MultiWoz dialogues from {len(files)} files")
        return dialogues

    def _multiwoz_dialogue(self, record: Dict[str, Any]) -> Optional[Dialogue]:
        turns = []
        for raw in record.get("turns", []):
            speaker = str(raw.get("speaker", "")).lower()
            if speaker not in ("user", "system"):
                continue
            turns.append(Turn(speaker=speaker, text=str(raw.get("utterance", "")).strip()))
        if not turns or "dialogue_id" not in record:
            self.logger.warning(f"Skipping MultiWoz record without turns: {record.get('dialogue_id')}")
            return None
        return Dialogue(
            dialogue_id=str(record["dialogue_id"]),
            domains=[str(s) for s in record.get("services", [])],
            turns=turns,
        )

    def convert_personachat(self, path: Path) -> List[Dialogue]:
        """
        Read the numbered ConvAI2 text format.

        Numbering restarts at 1 for each dialogue; ``your persona:`` lines are
        skipped; each remaining line holds the partner utterance (user) and the
        response (system) separated by a tab.
        """
        if not path.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=path))
        try:
            text = FileService(str(path.parent)).read_text_file(path)
        except FileOperationError as e:
            raise CorpusError(str(e)) from e

        dialogues: List[Dialogue] = []
        turns: List[Turn] = []

        def flush() -> None:
            if turns:
                dialogues.append(Dialogue(dialogue_id=f"{path.stem}-{len(dialogues):05d}", turns=list(turns)))
                turns.clear()

        for line in text.splitlines():
            match = _PERSONA_LINE.match(line.strip())
            if not match:
                continue
            number, body = int(match.group(1)), match.group(2)
            if number == 1:
                flush()
            if "persona:" in body.split("\t")[0]:
                continue
            fields = body.split("\t")
            if fields[0].strip() and fields[0].strip() != "__SILENCE__":
                turns.append(Turn(speaker="user", text=fields[0].strip()))
            if len(fields) > 1 and fields[1].strip():
                turns.append(Turn(speaker="system", text=fields[1].strip()))
        flush()
        self.logger.info(f"Converted {len(dialogues)} PersonaChat dialogues from {path}")
        return dialogues
