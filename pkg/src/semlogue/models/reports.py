"""Loss breakdowns, run logs and evaluation reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..utils.exceptions import ValidationError

# Column order of per-example metric rows
METRIC_NAMES = (
    "dialuation",
    "cr",
    "ss",
    "contanic",
    "embedding_cosine",
    "bleu1",
    "bleu2",
    "bleu3",
    "bleu4",
    "bleu",
    "rouge1",
    "rouge2",
    "rougeL",
)

BLEU_AGGREGATION = "mean of sentence-level cumulative BLEU (floor smoothing 1e-9)"


@dataclass
class LossBreakdown:
    """Per-batch loss components; all values are batch means."""

    l_ce: float
    l_scl: float = 0.0
    l_bse: float = 0.0
    l_total: float = 0.0
    contanic_score: float = 0.0
    bse_score: float = 0.0

    def recomposed(self, variant: str, lambda_: float, sigma: float) -> float:
        """Total loss rebuilt from the components for ``variant``."""
        if variant == "ce":
            return self.l_ce
        if variant == "additive-ce":
            return self.l_ce + self.contanic_score
        if variant in ("weighted-semantic-ce", "weighted-semantic-context-ce"):
            return self.l_scl
        return lambda_ * self.l_ce + (1.0 - lambda_) * self.l_scl + sigma * self.l_bse

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([self.l_ce, self.l_scl, self.l_bse, self.l_total])))

    def to_dict(self) -> Dict[str, float]:
        return {
            "l_ce": self.l_ce,
            "l_scl": self.l_scl,
            "l_bse": self.l_bse,
            "l_total": self.l_total,
            "contanic": self.contanic_score,
            "bse_score": self.bse_score,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> LossBreakdown:
        return cls(
            l_ce=float(data["l_ce"]),
            l_scl=float(data.get("l_scl", 0.0)),
            l_bse=float(data.get("l_bse", 0.0)),
            l_total=float(data["l_total"]),
            contanic_score=float(data.get("contanic", 0.0)),
            bse_score=float(data.get("bse_score", 0.0)),
        )


@dataclass
class StepRecord:
    """One training-log line."""

    step: int
    variant: str
    breakdown: LossBreakdown
    epoch: int = 0

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"step": self.step, "epoch": self.epoch, "variant": self.variant}
        record.update(self.breakdown.to_dict())
        return record

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> StepRecord:
        return cls(
            step=int(data["step"]),
            variant=data["variant"],
            breakdown=LossBreakdown.from_dict(data),
            epoch=int(data.get("epoch", 0)),
        )


@dataclass
class ExampleScore:
    """Metric values for one (context, gold, generated) triple."""

    index: int
    context: str
    gold: str
    generated: str
    metrics: Dict[str, float]
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "context": self.context,
            "gold": self.gold,
            "generated": self.generated,
            "metrics": dict(self.metrics),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ExampleScore:
        return cls(
            index=int(data["index"]),
            context=data["context"],
            gold=data["gold"],
            generated=data["generated"],
            metrics={k: float(v) for k, v in data["metrics"].items()},
            flags=list(data.get("flags", [])),
        )


@dataclass
class ScoreReport:
    """Per-example rows and corpus means for every metric."""

    rows: List[ExampleScore] = field(default_factory=list)
    means: Dict[str, float] = field(default_factory=dict)
    distinct: Dict[str, float] = field(default_factory=dict)
    aggregation: str = BLEU_AGGREGATION

    @property
    def count(self) -> int:
        return len(self.rows)

    @classmethod
    def from_rows(cls, rows: List[ExampleScore], distinct: Optional[Dict[str, float]] = None) -> ScoreReport:
        report = cls(rows=list(rows), distinct=dict(distinct or {}))
        report.means = report.recompute_means()
        return report

    def recompute_means(self) -> Dict[str, float]:
        """Arithmetic mean of every metric over the rows."""
        if not self.rows:
            return {name: 0.0 for name in METRIC_NAMES}
        names = list(self.rows[0].metrics)
        return {name: float(np.mean([row.metrics[name] for row in self.rows])) for name in names}

    def csv_header(self) -> List[str]:
        names = list(self.rows[0].metrics) if self.rows else list(METRIC_NAMES)
        return ["index"] + names + ["flags"]

    def csv_rows(self) -> List[List[Any]]:
        header = self.csv_header()
        out: List[List[Any]] = []
        for row in self.rows:
            out.append([row.index] + [row.metrics[n] for n in header[1:-1]] + [";".join(row.flags)])
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "means": dict(self.means),
            "distinct": dict(self.distinct),
            "aggregation": self.aggregation,
            "rows": [row.to_dict() for row in self.rows],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ScoreReport:
        rows = [ExampleScore.from_dict(r) for r in data.get("rows", [])]
        if "count" in data and int(data["count"]) != len(rows):
            raise ValidationError(f"report claims {data['count']} rows but holds {len(rows)}")
        return cls(
            rows=rows,
            means={k: float(v) for k, v in data.get("means", {}).items()},
            distinct={k: float(v) for k, v in data.get("distinct", {}).items()},
            aggregation=data.get("aggregation", BLEU_AGGREGATION),
        )


@dataclass
class EpochRecord:
    """End-of-epoch summary."""

    epoch: int
    steps: int
    wall_clock_seconds: float
    mean_loss: float
    validation: Optional[Dict[str, float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "steps": self.steps,
            "wall_clock_seconds": self.wall_clock_seconds,
            "mean_loss": self.mean_loss,
            "validation": dict(self.validation) if self.validation is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> EpochRecord:
        return cls(
            epoch=int(data["epoch"]),
            steps=int(data["steps"]),
            wall_clock_seconds=float(data["wall_clock_seconds"]),
            mean_loss=float(data["mean_loss"]),
            validation=data.get("validation"),
        )


@dataclass
class RunLog:
    """Step records with strictly increasing step indices, plus epoch summaries."""

    steps: List[StepRecord] = field(default_factory=list)
    epochs: List[EpochRecord] = field(default_factory=list)

    def add_step(self, record: StepRecord) -> None:
        if self.steps and record.step <= self.steps[-1].step:
            raise ValidationError(f"step {record.step} does not follow step {self.steps[-1].step}")
        self.steps.append(record)

    def add_epoch(self, record: EpochRecord) -> None:
        self.epochs.append(record)

    @property
    def last_step(self) -> int:
        return self.steps[-1].step if self.steps else 0

    def loss_sequence(self) -> List[Tuple[int, float, float, float, float]]:
        """(step, l_total, l_ce, l_scl, l_bse) per step; excludes wall-clock."""
        return [
            (r.step, r.breakdown.l_total, r.breakdown.l_ce, r.breakdown.l_scl, r.breakdown.l_bse)
            for r in self.steps
        ]

    def ce_values(self) -> List[float]:
        return [r.breakdown.l_ce for r in self.steps]
