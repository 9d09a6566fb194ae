"""Corpus evaluation: Dialuation, BLEU, ROUGE, distinct-n and embedding cosine."""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..config.settings import MetricDefaults
from ..models.configs import DialuationWeights
from ..models.reports import ExampleScore, ScoreReport
from ..utils.exceptions import ValidationError
from .scoring_service import ScoringService
from .tokenizer import strip_tags, tokenize

# Texts embedded per provider call during evaluation
EVAL_CHUNK = 32


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of the n-grams of ``tokens``; empty when there are fewer than n tokens."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def dialuation(cr: float, ss: float, weights: DialuationWeights) -> float:
    """100 * (delta_c * cr + delta_ss * ss) / (delta_c + delta_ss)."""
    total = weights.delta_c + weights.delta_ss
    if total <= 0:
        raise ValidationError("delta_c + delta_ss must be positive")
    return 100.0 * (weights.delta_c * cr + weights.delta_ss * ss) / total


@dataclass
class BleuResult:
    """Clipped n-gram precisions, brevity penalty and cumulative BLEU in [0, 1]."""

    precisions: List[float]
    cumulative: float
    brevity_penalty: float
    empty: bool = False
    skipped_orders: List[int] = field(default_factory=list)


def bleu(candidate: Sequence[str], reference: Sequence[str], max_n: int = MetricDefaults.BLEU_MAX_N) -> BleuResult:
    """
    Sentence BLEU with clipped precisions and floor smoothing.

    Orders for which neither side has an n-gram are left out of the geometric
    mean and report precision 0. Any other zero precision is floored at 1e-9
    inside the log. An empty candidate scores 0 with ``empty`` set.
    """
    if not candidate:
        return BleuResult(precisions=[0.0] * max_n, cumulative=0.0, brevity_penalty=0.0, empty=True)

    precisions: List[float] = []
    logs: List[float] = []
    skipped: List[int] = []
    for n in range(1, max_n + 1):
        cand, ref = ngram_counts(candidate, n), ngram_counts(reference, n)
        total = sum(cand.values())
        if total == 0 and not ref:
            precisions.append(0.0)
            skipped.append(n)
            continue
        clipped = sum(min(count, ref[gram]) for gram, count in cand.items())
        p = clipped / total if total else 0.0
        precisions.append(p)
        logs.append(math.log(max(p, MetricDefaults.BLEU_FLOOR)))

    c, r = len(candidate), len(reference)
    bp = math.exp(1.0 - r / c) if c < r else 1.0
    cumulative = bp * math.exp(sum(logs) / len(logs)) if logs else 0.0
    return BleuResult(precisions=precisions, cumulative=cumulative, brevity_penalty=bp, skipped_orders=skipped)


@dataclass
class RougeResult:
    rouge1: float
    rouge2: float
    rougeL: float
    empty: bool = False


def _f1(overlap: float, predicted: int, actual: int) -> float:
    if overlap == 0 or predicted == 0 or actual == 0:
        return 0.0
    precision, recall = overlap / predicted, overlap / actual
    return 2 * precision * recall / (precision + recall)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """
    Length of the longest common subsequence of two token lists.

    Args:
        a: First token sequence
        b: Second token sequence

    Returns:
        LCS length, computed with one rolling row of the dynamic program
    """
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    """F1 of clipped n-gram overlap."""
    cand, ref = ngram_counts(candidate, n), ngram_counts(reference, n)
    overlap = sum((cand & ref).values())
    return _f1(overlap, sum(cand.values()), sum(ref.values()))


def rouge(candidate: Sequence[str], reference: Sequence[str]) -> RougeResult:
    """ROUGE-1/2 n-gram F1 and LCS-based ROUGE-L F1; an empty side scores 0 with a flag."""
    if not candidate or not reference:
        return RougeResult(0.0, 0.0, 0.0, empty=True)
    return RougeResult(
        rouge1=rouge_n(candidate, reference, 1),
        rouge2=rouge_n(candidate, reference, 2),
        rougeL=_f1(lcs_length(candidate, reference), len(candidate), len(reference)),
    )


def distinct_n(candidates: Sequence[Sequence[str]], n: int) -> float:
    """Unique n-grams over total n-grams across the corpus; 0 when there are none."""
    if n < 1:
        raise ValidationError("distinct-n needs n >= 1")
    counts: Counter = Counter()
    for tokens in candidates:
        counts.update(ngram_counts(tokens, n))
    total = sum(counts.values())
    return len(counts) / total if total else 0.0


def text_tokens(text: str) -> List[str]:
    """Tokens used by the lexical metrics: tags removed, lowercased."""
    return tokenize(strip_tags(text))


class MetricsService:
    """Scores (context, gold, generated) triples into a ScoreReport."""

    def __init__(self, scoring: ScoringService, weights: DialuationWeights) -> None:
        """Initialize the metrics service with a scoring service and Dialuation weights."""
        self.logger = logging.getLogger(__name__)
        self.scoring = scoring
        self.weights = weights

    def score_row(self, index: int, context: str, gold: str, generated: str) -> ExampleScore:
        return self.score_rows([(context, gold, generated)], start=index)[0]

    def score_rows(self, triples: Sequence[Tuple[str, str, str]], start: int = 0) -> List[ExampleScore]:
        """
        Score triples in chunks of EVAL_CHUNK, one provider call per chunk.

        Args:
            triples: (context, gold, generated) texts
            start: Index given to the first row

        Returns:
            One ExampleScore per triple, in input order
        """
        rows: List[ExampleScore] = []
        for offset in range(0, len(triples), EVAL_CHUNK):
            chunk = triples[offset : offset + EVAL_CHUNK]
            contexts = [t[0] for t in chunk]
            golds = [t[1] for t in chunk]
            generated = [t[2] for t in chunk]
            scores = self.scoring.score_batch(contexts, golds, generated)
            cosines = self.scoring.embedding_cosine(golds, generated)
            for i, (triple, score, cos) in enumerate(zip(chunk, scores, cosines)):
                rows.append(self._row(start + offset + i, triple, score.cr, score.ss, score.contanic, cos))
        return rows

    def _row(
        self, index: int, triple: Tuple[str, str, str], cr: float, ss: float, contanic: float, cos: float
    ) -> ExampleScore:
        context, gold, generated = triple
        cand, ref = text_tokens(generated), text_tokens(gold)
        b = bleu(cand, ref)
        r = rouge(cand, ref)
        metrics: Dict[str, float] = {
            "dialuation": dialuation(cr, ss, self.weights),
            "cr": cr,
            "ss": ss,
            "contanic": contanic,
            "embedding_cosine": cos,
        }
        for n, p in enumerate(b.precisions, start=1):
            metrics[f"bleu{n}"] = p
        metrics["bleu"] = b.cumulative
        metrics.update(rouge1=r.rouge1, rouge2=r.rouge2, rougeL=r.rougeL)
        flags = []
        if b.empty:
            flags.append("empty-candidate")
        if not ref:
            flags.append("empty-reference")
        return ExampleScore(index=index, context=context, gold=gold, generated=generated, metrics=metrics, flags=flags)

    def evaluate(self, triples: Sequence[Tuple[str, str, str]]) -> ScoreReport:
        """Per-example rows, corpus means and distinct-n over the generated texts."""
        rows = self.score_rows(list(triples))
        candidates = [text_tokens(t[2]) for t in triples]
        distinct = {f"distinct{n}": distinct_n(candidates, n) for n in MetricDefaults.DISTINCT_ORDERS}
        report = ScoreReport.from_rows(rows, distinct)
        self.logger.info(
            f"Evaluated {report.count} examples: dialuation {report.means.get('dialuation', 0.0):.2f}, "
            f"bleu {report.means.get('bleu', 0.0):.4f}"
        )
        return report
