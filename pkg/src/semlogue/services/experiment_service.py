"""CE versus SemTextualLogue comparison at equal step budget over several seeds."""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

from ..models.configs import ExperimentConfig, LossConfig
from ..models.dialogue import Dialogue
from ..nn import DialogueTransformer
from .corpus_service import CorpusService
from .embedding_service import EmbeddingProvider, HashedEmbedder, create_provider
from .file_service import FileService
from .trainer_service import TrainerService, evaluate_corpus

BASELINE = "ce"
CANDIDATE = "semtextuallogue"


@dataclass
class SeedOutcome:
    """Held-out corpus means of both variants for one seed."""

    seed: int
    baseline: Dict[str, float]
    candidate: Dict[str, float]

    @property
    def candidate_wins(self) -> bool:
        return self.candidate["dialuation"] >= self.baseline["dialuation"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            BASELINE: dict(self.baseline),
            CANDIDATE: dict(self.candidate),
            "candidate_wins": self.candidate_wins,
        }


@dataclass
class ExperimentReport:
    steps: int
    outcomes: List[SeedOutcome] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(o.candidate_wins for o in self.outcomes)

    @property
    def total(self) -> int:
        return len(self.outcomes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "wins": self.wins,
            "total": self.total,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }

    def csv_rows(self) -> List[List[Any]]:
        return [
            [o.seed, o.baseline["dialuation"], o.candidate["dialuation"], o.baseline["bleu"], o.candidate["bleu"]]
            for o in self.outcomes
        ]


class ExperimentService:
    """
    Trains the baseline and the candidate loss per seed and scores both on the test split.

    The split is fixed by the corpus split seed; each seed changes model
    initialization and batch order. Both variants see the same step budget.
    """

    CSV_HEADER = ["seed", "ce_dialuation", "stl_dialuation", "ce_bleu", "stl_bleu"]

    def __init__(self, config: ExperimentConfig, run_dir: Optional[str] = None) -> None:
        """Initialize the experiment with a base config and an optional output directory."""
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.files = FileService(run_dir) if run_dir else None

    def _evaluation_provider(self) -> EmbeddingProvider:
        # Intrinsic embeddings differ per trained model; compare on a shared space instead
        if self.config.provider.kind == "intrinsic":
            return HashedEmbedder(strip=self.config.provider.strip_tags)
        return create_provider(self.config.provider)

    def variant_config(self, variant: str, seed: int, steps: int, batches_per_epoch: int) -> ExperimentConfig:
        loss: LossConfig = replace(self.config.loss, variant=variant)
        epochs = max(1, -(-steps // max(batches_per_epoch, 1)))
        train = replace(self.config.train, seed=seed, max_steps=steps, epochs=epochs, validate_every_epoch=False)
        model = dict(self.config.model, seed=seed)
        return replace(self.config, model=model, loss=loss, train=train)

    def run(self, dialogues: Sequence[Dialogue], seeds: Sequence[int], steps: int) -> ExperimentReport:
        """Train both variants for ``steps`` steps per seed; report held-out metric means."""
        corpus = CorpusService(self.config.corpus.context_window)
        corpus_split = corpus.split(dialogues, self.config.corpus.split_seed)
        vocab = corpus.build_vocab(corpus_split.train, self.config.corpus.vocab_max_size, self.config.corpus.min_freq)
        train_examples = corpus.build_examples(corpus_split.train)
        test_examples = corpus.build_examples(corpus_split.test)
        batches = -(-len(train_examples) // self.config.train.batch_size)
        provider = self._evaluation_provider()

        report = ExperimentReport(steps=steps)
        try:
            for seed in seeds:
                means = {}
                for variant in (BASELINE, CANDIDATE):
                    config = self.variant_config(variant, seed, steps, batches)
                    model = DialogueTransformer(config.model_config(len(vocab)))
                    trainer = TrainerService(config, vocab, provider=None if config.provider.kind == "intrinsic" else provider)
                    trainer.train(model, train_examples)
                    scores = evaluate_corpus(
                        model,
                        vocab,
                        test_examples,
                        provider,
                        config.evaluation,
                        config.loss.weights,
                        config.train.decode_margin,
                        config.train.batch_size,
                    )
                    means[variant] = scores.means
                    self.logger.info(f"seed {seed} {variant}: dialuation {scores.means['dialuation']:.2f}")
                report.outcomes.append(SeedOutcome(seed=seed, baseline=means[BASELINE], candidate=means[CANDIDATE]))
        finally:
            provider.close()

        if self.files is not None:
            self.files.write_json_file(self.files.path("experiment.json"), report.to_dict())
            self.files.write_csv_file(self.files.path("experiment.csv"), self.CSV_HEADER, report.csv_rows())
        self.logger.info(f"Candidate at least as good as baseline on {report.wins}/{report.total} seeds")
        return report
