"""Sentence embedding providers: hashed n-grams, frozen model encoder, remote HTTP."""

import hashlib
import logging
import time
from abc import ABC, abstractmethod
from typing import Any, List, Optional, Sequence, Tuple

import httpx
import numpy as np

from ..config.settings import EmbeddingDefaults
from ..models.configs import ProviderConfig
from ..models.vocab import Vocab
from ..utils.exceptions import (
    DimensionMismatchError,
    EmbeddingProtocolError,
    EmbeddingStatusError,
    EmbeddingTimeoutError,
    RemoteEmbeddingError,
    ValidationError,
)
from .tokenizer import strip_tags, tokenize


class EmbeddingProvider(ABC):
    """
    Maps texts to fixed-dimension vectors.

    Providers work on plain arrays and never touch the differentiation tape,
    so every score built on them is a constant to the optimizer.
    """

    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """One row per text, in input order; shape [len(texts), dim]."""
        if isinstance(texts, str) or not isinstance(texts, (list, tuple)):
            raise ValidationError("embed expects a list of strings")
        if not texts:
            raise ValidationError("embed expects at least one text")
        vectors = self._embed(list(texts))
        if vectors.shape != (len(texts), self.dim):
            raise DimensionMismatchError(self.dim, int(vectors.shape[-1]), type(self).__name__)
        return vectors

    @abstractmethod
    def _embed(self, texts: List[str]) -> np.ndarray:
        pass

    def close(self) -> None:
        """Release resources; a no-op for in-process providers."""


class HashedEmbedder(EmbeddingProvider):
    """
    Signed feature hashing of word unigrams and bigrams, L2-normalized.

    Each n-gram picks a bucket and a ±1 sign from one blake2b digest. The zero
    vector (no n-grams) stays zero.
    """

    def __init__(self, dim: int = EmbeddingDefaults.HASHED_DIM, strip: bool = EmbeddingDefaults.STRIP_TAGS) -> None:
        if dim <= 0:
            raise ValidationError("hashed embedding dim must be positive")
        self.dim = dim
        self.strip = strip

    def ngrams(self, text: str) -> List[str]:
        tokens = tokenize(strip_tags(text) if self.strip else text)
        return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]

    def feature_index(self, feature: str) -> Tuple[int, float]:
        digest = int.from_bytes(hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest(), "little")
        sign = 1.0 if (digest >> 63) & 1 == 0 else -1.0
        return digest % self.dim, sign

    def feature_indices(self, text: str) -> List[Tuple[int, float]]:
        """(bucket, sign) per n-gram of ``text``."""
        return [self.feature_index(f) for f in self.ngrams(text)]

    def hashed_embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dim, dtype=np.float64)
        for bucket, sign in self.feature_indices(text):
            vector[bucket] += sign
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else vector

    def _embed(self, texts: List[str]) -> np.ndarray:
        return np.stack([self.hashed_embed(t) for t in texts])


class IntrinsicEmbedder(EmbeddingProvider):
    """
    Mean-pooled encoder states of a frozen snapshot of the training model.

    The snapshot only changes when ``refresh`` is called (at epoch boundaries).
    """

    def __init__(self, vocab: Vocab, model: Any, strip: bool = EmbeddingDefaults.STRIP_TAGS) -> None:
        self.vocab = vocab
        self.strip = strip
        self.logger = logging.getLogger(__name__)
        self.refresh(model)

    def refresh(self, model: Any) -> None:
        self.snapshot = model.snapshot()
        self.dim = self.snapshot.config.embed_dim
        self.logger.debug("Intrinsic embedder snapshot refreshed")

    def _embed(self, texts: List[str]) -> np.ndarray:
        sources = [self.vocab.encode(tokenize(strip_tags(t) if self.strip else t)) for t in texts]
        return self.snapshot.pooled_source_states(sources).astype(np.float64)


class RemoteEmbedder(EmbeddingProvider):
    """
    HTTP client for ``POST /embed`` with ``{"texts": [...]}``.

    Batches of at most ``max_batch`` texts are sent one after another and the
    vectors reassembled in input order. Timeouts, transport failures and 5xx
    answers are retried; 4xx answers fail at once.
    """

    def __init__(
        self,
        config: ProviderConfig,
        client: Optional[httpx.Client] = None,
        transport: Optional[httpx.BaseTransport] = None,
        backoff: float = EmbeddingDefaults.RETRY_BACKOFF,
    ) -> None:
        if not config.endpoint:
            raise ValidationError("remote provider requires an endpoint URL")
        self.config = config
        self.dim = config.dim
        self.endpoint = config.endpoint
        self.backoff = backoff
        self.logger = logging.getLogger(__name__)
        self._owns_client = client is None
        self.client = client or httpx.Client(timeout=config.timeout, transport=transport)
        self.requests_sent = 0

    def _embed(self, texts: List[str]) -> np.ndarray:
        rows: List[np.ndarray] = []
        size = self.config.max_batch
        for batch_index, start in enumerate(range(0, len(texts), size)):
            batch = texts[start : start + size]
            if self.config.strip_tags:
                batch = [strip_tags(t) for t in batch]
            rows.append(self._request(batch, batch_index))
        return np.concatenate(rows, axis=0)

    def _request(self, batch: List[str], batch_index: int) -> np.ndarray:
        last_error: Optional[RemoteEmbeddingError] = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self.logger.warning(f"Retrying embedding batch {batch_index} (attempt {attempt + 1}): {last_error}")
                if self.backoff > 0:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                self.requests_sent += 1
                response = self.client.post(self.endpoint, json={"texts": batch})
            except httpx.TimeoutException as e:
                last_error = EmbeddingTimeoutError(f"request timed out: {e}", self.endpoint, batch_index)
                continue
            except httpx.TransportError as e:
                last_error = RemoteEmbeddingError(f"transport failure: {e}", self.endpoint, batch_index)
                continue

            if response.status_code >= 500:
                last_error = EmbeddingStatusError(
                    f"server answered {response.status_code}", self.endpoint, batch_index, response.status_code
                )
                continue
            if response.status_code >= 400 or response.status_code < 200:
                raise EmbeddingStatusError(
                    f"server answered {response.status_code}", self.endpoint, batch_index, response.status_code
                )
            return self._parse(response, len(batch), batch_index)

        assert last_error is not None
        raise last_error

    def _parse(self, response: httpx.Response, expected: int, batch_index: int) -> np.ndarray:
        try:
            payload = response.json()
            vectors = payload["embeddings"]
        except (ValueError, KeyError, TypeError) as e:
            raise EmbeddingProtocolError(f"malformed response: {e}", self.endpoint, batch_index) from e
        if not isinstance(vectors, list) or len(vectors) != expected:
            raise EmbeddingProtocolError(
                f"expected {expected} embeddings, got {len(vectors) if isinstance(vectors, list) else 'none'}",
                self.endpoint,
                batch_index,
            )
        for vector in vectors:
            if not isinstance(vector, list) or len(vector) != self.dim:
                actual = len(vector) if isinstance(vector, list) else 0
                raise DimensionMismatchError(self.dim, actual, f"endpoint={self.endpoint}, batch={batch_index}")
        array = np.asarray(vectors, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise EmbeddingProtocolError("non-finite embedding values", self.endpoint, batch_index)
        return array

    def close(self) -> None:
        if self._owns_client:
            self.client.close()


def create_provider(
    config: ProviderConfig,
    vocab: Optional[Vocab] = None,
    model: Any = None,
    client: Optional[httpx.Client] = None,
) -> EmbeddingProvider:
    """Build the provider named by ``config.kind``."""
    if config.kind == "hashed":
        return HashedEmbedder(dim=config.dim, strip=config.strip_tags)
    if config.kind == "intrinsic":
        if vocab is None or model is None:
            raise ValidationError("intrinsic provider needs the vocabulary and the model")
        return IntrinsicEmbedder(vocab, model, strip=config.strip_tags)
    return RemoteEmbedder(config, client=client)
