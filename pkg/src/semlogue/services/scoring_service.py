"""Context relevance, semantic similarity and the Contanic score."""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..models.configs import ContanicWeights
from ..utils.exceptions import DimensionMismatchError, ValidationError
from .embedding_service import EmbeddingProvider


@dataclass(frozen=True)
class ScoreTriple:
    """CR and SS in [0, 1] and contanic = alpha * cr + beta * ss."""

    cr: float
    ss: float
    contanic: float


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|), or 0 when either vector is zero."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatchError(a.shape[0], b.shape[0], "cosine")
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))


def _unit_cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.clip(cosine(a, b), 0.0, 1.0))


def context_relevance(context_text: str, generated_text: str, provider: EmbeddingProvider) -> float:
    """
    Context relevance of a generated response.

    Args:
        context_text: Serialized dialogue context
        generated_text: Model response
        provider: Embedding provider for both texts

    Returns:
        Cosine of the two embeddings clipped to [0, 1]
    """
    context, generated = provider.embed([context_text, generated_text])
    return _unit_cosine(context, generated)


def semantic_similarity(gold_text: str, generated_text: str, provider: EmbeddingProvider) -> float:
    """Cosine of gold and generated embeddings, clipped to [0, 1]."""
    gold, generated = provider.embed([gold_text, generated_text])
    return _unit_cosine(gold, generated)


def contanic(cr: float, ss: float, weights: ContanicWeights) -> float:
    """
    Weighted combination of context relevance and semantic similarity.

    Args:
        cr: Context relevance in [0, 1]
        ss: Semantic similarity in [0, 1]
        weights: alpha for cr, beta for ss

    Returns:
        alpha * cr + beta * ss
    """
    return weights.alpha * cr + weights.beta * ss


class ScoringService:
    """Scores generated responses against their contexts and gold responses."""

    def __init__(self, provider: EmbeddingProvider, weights: ContanicWeights) -> None:
        """Initialize the scoring service with a provider and Contanic weights."""
        self.logger = logging.getLogger(__name__)
        self.provider = provider
        self.weights = weights

    def score(self, context: str, gold: str, generated: str) -> ScoreTriple:
        return self.score_batch([context], [gold], [generated])[0]

    def score_batch(
        self, contexts: Sequence[str], golds: Sequence[str], generated: Sequence[str]
    ) -> List[ScoreTriple]:
        """Embed everything in one provider call and score each triple."""
        n = len(generated)
        if not (len(contexts) == len(golds) == n):
            raise ValidationError("contexts, golds and generated texts must align")
        if n == 0:
            return []
        vectors = self.provider.embed(list(contexts) + list(golds) + list(generated))
        triples = []
        for i in range(n):
            cr = _unit_cosine(vectors[i], vectors[2 * n + i])
            ss = _unit_cosine(vectors[n + i], vectors[2 * n + i])
            triples.append(ScoreTriple(cr=cr, ss=ss, contanic=contanic(cr, ss, self.weights)))
        self.logger.debug(f"Scored {n} generations, mean contanic {np.mean([t.contanic for t in triples]):.4f}")
        return triples

    def embedding_cosine(self, golds: Sequence[str], generated: Sequence[str]) -> List[float]:
        """Provider cosine of gold and generated, scaled to 0..100."""
        if not generated:
            return []
        vectors = self.provider.embed(list(golds) + list(generated))
        n = len(generated)
        return [100.0 * cosine(vectors[i], vectors[n + i]) for i in range(n)]
