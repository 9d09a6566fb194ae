"""Logging configuration for semlogue."""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional, Union

from ..config.settings import APP_NAME, LoggingDefaults

PathLike = Union[str, Path]


class LoggingConfig:
    """
    Process-wide logging for the command line.

    Console records go to stderr; stdout is reserved for command results
    (score tables, summaries) so they stay machine-readable. Training runs
    can mirror records into their run directory with ``attach_run_log``.
    """

    _run_handler: Optional[logging.Handler] = None

    @staticmethod
    def _formatter() -> logging.Formatter:
        return logging.Formatter(LoggingDefaults.FORMAT, LoggingDefaults.DATE_FORMAT)

    @classmethod
    def setup_logging(
        cls,
        log_level: str = "INFO",
        log_to_file: bool = False,
        log_file_path: Optional[PathLike] = None,
        max_file_size: int = LoggingDefaults.MAX_BYTES,
        backup_count: int = LoggingDefaults.BACKUP_COUNT,
    ) -> None:
        """
        Install the console handler and, optionally, a rotating log file.

        Args:
            log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
            log_to_file: Write to ``log_file_path`` (or ``./logs/semlogue.log``)
            log_file_path: Log file; giving one implies ``log_to_file``
            max_file_size: Bytes before the file rotates
            backup_count: Rotated files kept
        """
        level = getattr(logging, log_level.upper(), logging.INFO)
        root = logging.getLogger()
        root.setLevel(level)
        root.handlers.clear()
        cls._run_handler = None

        console = logging.StreamHandler()
        console.setLevel(level)
        console.setFormatter(cls._formatter())
        root.addHandler(console)

        if log_to_file or log_file_path is not None:
            path = Path(log_file_path) if log_file_path is not None else Path.cwd() / "logs" / f"{APP_NAME}.log"
            path.parent.mkdir(parents=True, exist_ok=True)
            rotating = logging.handlers.RotatingFileHandler(
                path, maxBytes=max_file_size, backupCount=backup_count, encoding="utf-8"
            )
            rotating.setLevel(level)
            rotating.setFormatter(cls._formatter())
            root.addHandler(rotating)

        for name in LoggingDefaults.QUIET_LOGGERS:
            logging.getLogger(name).setLevel(max(level, logging.WARNING))
        logging.getLogger(APP_NAME).setLevel(level)
        logging.getLogger(__name__).debug(f"Logging configured: level={log_level}, file={log_file_path}")

    @classmethod
    def setup_dev_logging(cls, log_file_path: Optional[PathLike] = None) -> None:
        """DEBUG level, e.g. to follow per-step loss breakdowns."""
        cls.setup_logging(log_level="DEBUG", log_file_path=log_file_path)

    @classmethod
    def setup_production_logging(cls, log_file_path: Optional[PathLike] = None) -> None:
        """INFO level with larger rotation for long training runs."""
        cls.setup_logging(
            log_level="INFO",
            log_file_path=log_file_path,
            max_file_size=LoggingDefaults.LONG_RUN_MAX_BYTES,
            backup_count=LoggingDefaults.LONG_RUN_BACKUP_COUNT,
        )

    @classmethod
    def attach_run_log(cls, run_dir: PathLike) -> Path:
        """Mirror application records into ``<run_dir>/train.log``; replaces any earlier mirror."""
        cls.detach_run_log()
        path = Path(run_dir) / LoggingDefaults.RUN_LOG_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, encoding="utf-8")
        handler.setLevel(logging.getLogger(APP_NAME).getEffectiveLevel())
        handler.setFormatter(cls._formatter())
        logging.getLogger().addHandler(handler)
        cls._run_handler = handler
        return path

    @classmethod
    def detach_run_log(cls) -> None:
        if cls._run_handler is None:
            return
        logging.getLogger().removeHandler(cls._run_handler)
        cls._run_handler.close()
        cls._run_handler = None

    @classmethod
    def disable_logging(cls) -> None:
        """Disable all logging (for testing)."""
        logging.disable(logging.CRITICAL)

    @classmethod
    def enable_logging(cls) -> None:
        """Re-enable logging after disable_logging()."""
        logging.disable(logging.NOTSET)
