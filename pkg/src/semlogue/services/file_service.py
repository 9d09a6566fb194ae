"""File service for semlogue run directories and data files."""

import csv
import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Sequence, Tuple

from ..config.settings import Paths
from ..utils.exceptions import FileOperationError


@contextmanager
def _io(action: str, file_path: Path) -> Iterator[None]:
    """Re-raise I/O and encoding failures as FileOperationError."""
    try:
        yield
    except FileOperationError:
        raise
    except UnicodeDecodeError as e:
        raise FileOperationError(f"File {file_path} is not valid UTF-8: {e}")
    except OSError as e:
        raise FileOperationError(f"Failed to {action} {file_path}: {e}")
    except (TypeError, ValueError) as e:
        raise FileOperationError(f"Failed to serialize data for {file_path}: {e}")


def _require(file_path: Path) -> None:
    if not file_path.is_file():
        raise FileOperationError(f"File not found: {file_path}")


class FileService:
    """
    Reads and writes the files of one run directory.

    Layout under ``base_dir``: step and epoch logs (JSONL), effective config,
    vocabulary and split (JSON), score reports (JSON + CSV) and
    ``checkpoints/``. Every failure surfaces as ``FileOperationError``.
    """

    def __init__(self, base_dir: str) -> None:
        self.logger = logging.getLogger(__name__)
        self.base_dir = Path(base_dir)
        with _io("create run directory", self.base_dir):
            self.base_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        """Path of a file directly inside the run directory."""
        return self.base_dir / name

    def get_checkpoint_dir(self) -> Path:
        path = self.base_dir / Paths.CHECKPOINT_DIR
        with _io("create", path):
            path.mkdir(exist_ok=True)
        return path

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------
    def read_json_file(self, file_path: Path) -> Any:
        _require(file_path)
        with _io("read", file_path):
            text = file_path.read_text(encoding="utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise FileOperationError(f"Invalid JSON in file {file_path}: {e}")

    def write_json_file(self, file_path: Path, data: Any, indent: int = 2) -> None:
        """Serialize first, then swap the file in; a failed write leaves the old file intact."""
        with _io("write", file_path):
            text = json.dumps(data, indent=indent, ensure_ascii=False)
            file_path.parent.mkdir(parents=True, exist_ok=True)
            staging = file_path.with_name(file_path.name + ".tmp")
            staging.write_text(text, encoding="utf-8")
            os.replace(staging, file_path)
        self.logger.debug(f"Wrote {file_path}")

    # ------------------------------------------------------------------
    # JSON lines
    # ------------------------------------------------------------------
    def iter_jsonl_lines(self, file_path: Path) -> Iterator[Tuple[int, str]]:
        """Yield (1-based line number, raw line) for every non-blank line."""
        _require(file_path)
        with _io("read", file_path), open(file_path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                if line.strip():
                    yield number, line

    def read_jsonl_file(self, file_path: Path) -> List[Any]:
        """Strict reader: the first malformed line is an error."""
        records = []
        for number, line in self.iter_jsonl_lines(file_path):
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise FileOperationError(f"Invalid JSON on line {number} of {file_path}: {e}")
        return records

    def write_jsonl_file(self, file_path: Path, records: Iterable[Any]) -> int:
        """Returns the number of lines written."""
        lines = [json.dumps(record, ensure_ascii=False) for record in records]
        with _io("write", file_path):
            file_path.parent.mkdir(parents=True, exist_ok=True)
            file_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        self.logger.debug(f"Wrote {len(lines)} records to {file_path}")
        return len(lines)

    def append_jsonl_record(self, file_path: Path, record: Any) -> None:
        line = json.dumps(record, ensure_ascii=False)
        with _io("append to", file_path):
            file_path.parent.mkdir(parents=True, exist_ok=True)
            with open(file_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    # ------------------------------------------------------------------
    # Other formats
    # ------------------------------------------------------------------
    def write_csv_file(self, file_path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        with _io("write", file_path):
            file_path.parent.mkdir(parents=True, exist_ok=True)
            with open(file_path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                writer.writerows(rows)

    def read_text_file(self, file_path: Path, encoding: str = "utf-8") -> str:
        _require(file_path)
        with _io("read", file_path):
            return file_path.read_text(encoding=encoding)

    def delete_file(self, file_path: Path) -> None:
        """Remove a file; a missing file is not an error."""
        with _io("delete", file_path):
            file_path.unlink(missing_ok=True)
