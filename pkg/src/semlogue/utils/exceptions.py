"""Custom exception classes for semlogue."""

from typing import Optional, Sequence, Tuple


class SemlogueError(Exception):
    """Base exception class for semlogue."""

    pass


class ValidationError(SemlogueError):
    """Raised when configuration or argument validation fails."""

    pass


class ShapeError(SemlogueError):
    """Raised when a tensor primitive receives incompatible shapes."""

    def __init__(self, primitive: str, shapes: Sequence[Tuple[int, ...]], detail: str = ""):
        self.primitive = primitive
        self.shapes = [tuple(s) for s in shapes]
        rendered = " vs ".join(str(list(s)) for s in self.shapes)
        message = f"{primitive}: incompatible shapes {rendered}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class GraphError(SemlogueError):
    """Raised when backward is called on an invalid root."""

    pass


class GradCheckError(SemlogueError):
    """Raised when a gradient check cannot be carried out."""

    pass


class CorpusError(SemlogueError):
    """Raised when corpus ingestion or preparation fails."""

    def __init__(self, message: str, report: Optional[object] = None):
        super().__init__(message)
        self.report = report


class FileOperationError(SemlogueError):
    """Raised when file operations fail."""

    pass


class EmbeddingError(SemlogueError):
    """Raised when an embedding provider fails."""

    pass


class DimensionMismatchError(EmbeddingError):
    """Raised when vectors of different dimensions meet."""

    def __init__(self, expected: int, actual: int, context: str = ""):
        self.expected = expected
        self.actual = actual
        message = f"Embedding dimension mismatch: expected {expected}, got {actual}"
        if context:
            message = f"{message} ({context})"
        super().__init__(message)


class RemoteEmbeddingError(EmbeddingError):
    """Raised when the remote embedding service cannot serve a batch."""

    def __init__(self, message: str, endpoint: str, batch_index: int):
        self.endpoint = endpoint
        self.batch_index = batch_index
        super().__init__(f"{message} [endpoint={endpoint}, batch={batch_index}]")


class EmbeddingTimeoutError(RemoteEmbeddingError):
    """Raised when the remote embedding service times out."""

    pass


class EmbeddingStatusError(RemoteEmbeddingError):
    """Raised when the remote embedding service answers with a failure status."""

    def __init__(self, message: str, endpoint: str, batch_index: int, status_code: int):
        self.status_code = status_code
        super().__init__(message, endpoint, batch_index)


class EmbeddingProtocolError(RemoteEmbeddingError):
    """Raised when the remote embedding response is malformed."""

    pass


class NumericError(SemlogueError):
    """Raised when training produces a non-finite loss."""

    def __init__(self, message: str, diagnostic_path: Optional[str] = None):
        self.diagnostic_path = diagnostic_path
        if diagnostic_path:
            message = f"{message} (batch dump: {diagnostic_path})"
        super().__init__(message)


class CheckpointError(SemlogueError):
    """Raised when a checkpoint cannot be written or restored."""

    pass
