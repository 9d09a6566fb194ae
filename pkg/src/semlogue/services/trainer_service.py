"""Training loop, greedy generation and corpus evaluation."""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..autodiff import TapeGraph, backward
from ..config.messages import ErrorMessages
from ..config.settings import Paths, TrainingDefaults
from ..models.configs import ContanicWeights, DialuationWeights, ExperimentConfig
from ..models.dialogue import TrainingExample
from ..models.reports import EpochRecord, RunLog, ScoreReport, StepRecord
from ..models.vocab import Vocab
from ..nn import AdamW, BaselineEstimator, DialogueTransformer, pad_batch, teacher_forcing_pair
from ..utils.exceptions import NumericError, ValidationError
from .checkpoint_service import CheckpointService, CheckpointState
from .corpus_service import encode_text
from .embedding_service import EmbeddingProvider, IntrinsicEmbedder, create_provider
from .file_service import FileService
from .loss_service import LossComputer
from .metrics_service import MetricsService
from .scoring_service import ScoringService
from .tokenizer import detokenize


@dataclass
class EncodedExample:
    """A training example with its token ids."""

    example: TrainingExample
    source: List[int]
    gold: List[int]
    prefix: List[int]
    targets: List[int]


def encode_examples(vocab: Vocab, examples: Sequence[TrainingExample], max_target_length: int) -> List[EncodedExample]:
    encoded = []
    for example in examples:
        gold = encode_text(vocab, example.gold_text)
        prefix, targets = teacher_forcing_pair(gold, max_target_length)
        encoded.append(EncodedExample(example, encode_text(vocab, example.context_text), gold, prefix, targets))
    return encoded


def epoch_order(seed: int, epoch: int, count: int, shuffle: bool = True) -> np.ndarray:
    """Example order of one epoch; a pure function of (seed, epoch) so resumed runs replay it."""
    if not shuffle:
        return np.arange(count)
    return np.random.default_rng([seed, epoch]).permutation(count)


def decode_limits(golds: Sequence[Sequence[int]], margin: int, max_target_length: int) -> List[int]:
    return [min(len(g) + margin, max_target_length) for g in golds]


def generate_texts(
    model: DialogueTransformer,
    vocab: Vocab,
    sources: Sequence[Sequence[int]],
    limits: Sequence[int],
) -> List[str]:
    """Greedy responses as detokenized text."""
    outputs = model.generate_greedy(sources, list(limits))
    return [detokenize(vocab.decode(ids)) for ids in outputs]


def evaluate_corpus(
    model: DialogueTransformer,
    vocab: Vocab,
    examples: Sequence[TrainingExample],
    provider: EmbeddingProvider,
    weights: DialuationWeights,
    contanic_weights: Optional[ContanicWeights] = None,
    decode_margin: int = TrainingDefaults.DECODE_MARGIN,
    batch_size: int = TrainingDefaults.BATCH_SIZE,
) -> ScoreReport:
    """
    Greedy-decode every example and score it with every metric.

    Decoding is capped per example at gold length + ``decode_margin`` tokens
    (bounded by the model's maximum target length).
    """
    if not examples:
        raise ValidationError("evaluation needs at least one example")
    encoded = encode_examples(vocab, examples, model.config.max_target_length)
    triples: List[Tuple[str, str, str]] = []
    for start in range(0, len(encoded), batch_size):
        batch = encoded[start : start + batch_size]
        limits = decode_limits([e.gold for e in batch], decode_margin, model.config.max_target_length)
        generated = generate_texts(model, vocab, [e.source for e in batch], limits)
        triples.extend((e.example.context_text, e.example.gold_text, g) for e, g in zip(batch, generated))
    scoring = ScoringService(provider, contanic_weights or ContanicWeights())
    return MetricsService(scoring, weights).evaluate(triples)


class TrainerService:
    """
    Batched training of a DialogueTransformer under one loss variant.

    Runs are fully determined by (config, corpus): model init uses the model
    seed, the estimator its own seed, and epoch orders derive from the
    training seed and epoch index.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        vocab: Vocab,
        run_dir: Optional[str] = None,
        provider: Optional[EmbeddingProvider] = None,
    ) -> None:
        """Initialize the trainer with a config, the vocabulary and an optional run directory."""
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.vocab = vocab
        self.files = FileService(run_dir) if run_dir else None
        self.checkpoints = CheckpointService()
        self.provider = provider
        self.estimator: Optional[BaselineEstimator] = None
        self.optimizer: Optional[AdamW] = None
        self.model: Optional[DialogueTransformer] = None
        self.contanic_history: List[float] = []

    # ------------------------------------------------------------------
    # Setup
    # ------------------------------------------------------------------
    def _setup(self, model: DialogueTransformer) -> None:
        loss = self.config.loss
        train = self.config.train
        self.model = model
        if loss.uses_estimator:
            self.estimator = BaselineEstimator(
                model.config.vocab_size,
                loss.bse_hidden,
                seed=train.seed + TrainingDefaults.ESTIMATOR_SEED_OFFSET,
                dtype=model.config.dtype,
            )
        named = list(model.named_parameters("model."))
        if self.estimator is not None:
            named += list(self.estimator.named_parameters("estimator."))
        self.optimizer = AdamW(named, lr=train.learning_rate, weight_decay=train.weight_decay)
        self.computer = LossComputer(loss, self.estimator)

    def _ensure_provider(self) -> EmbeddingProvider:
        if self.provider is None:
            self.provider = create_provider(self.config.provider, vocab=self.vocab, model=self.model)
        return self.provider

    def _restore(self, state: CheckpointState) -> None:
        assert self.model is not None and self.optimizer is not None
        if state.vocab.hash != self.vocab.hash:
            raise ValidationError("resume checkpoint was trained on a different vocabulary")
        self.model.load_state_dict(state.model)
        self.model.truncation_count = state.truncation_count
        if self.estimator is not None:
            self.estimator.load_state_dict(state.estimator)
        self.optimizer.load_state_dict(state.optimizer)
        provider = self._ensure_provider() if state.provider else None
        if isinstance(provider, IntrinsicEmbedder):
            provider.snapshot.load_state_dict(state.provider)

    def checkpoint_state(self, epoch: int, batch_index: int) -> CheckpointState:
        """Snapshot of everything a resumed run needs."""
        assert self.model is not None and self.optimizer is not None
        provider_state = {}
        if isinstance(self.provider, IntrinsicEmbedder):
            provider_state = self.provider.snapshot.state_dict()
        return CheckpointState(
            model_config=self.model.config,
            vocab=self.vocab,
            model=self.model.state_dict(),
            estimator=self.estimator.state_dict() if self.estimator is not None else {},
            optimizer=self.optimizer.state_dict(),
            provider=provider_state,
            experiment=self.config.to_dict(),
            epoch=epoch,
            batch_index=batch_index,
            step=self.optimizer.step_count,
            seed=self.config.train.seed,
            truncation_count=self.model.truncation_count,
        )

    # ------------------------------------------------------------------
    # Steps
    # ------------------------------------------------------------------
    def contanic_scores(self, batch: Sequence[EncodedExample]) -> np.ndarray:
        """Greedy-decode the batch with current parameters and score it; plain constants."""
        assert self.model is not None
        limits = decode_limits([e.gold for e in batch], self.config.train.decode_margin, self.model.config.max_target_length)
        generated = generate_texts(self.model, self.vocab, [e.source for e in batch], limits)
        scoring = ScoringService(self._ensure_provider(), self.config.loss.effective_weights)
        triples = scoring.score_batch(
            [e.example.context_text for e in batch], [e.example.gold_text for e in batch], generated
        )
        return np.array([t.contanic for t in triples], dtype=np.float64)

    def train_step(self, batch: Sequence[EncodedExample], epoch: int = 0) -> StepRecord:
        """One forward/backward/update on ``batch``; raises NumericError on a non-finite loss."""
        assert self.model is not None and self.optimizer is not None
        targets, keep = pad_batch([e.targets for e in batch])
        scores = self.contanic_scores(batch) if self.config.loss.needs_scores else None

        with TapeGraph() as tape:
            probs = self.model.forward_teacher_forced([e.source for e in batch], [e.prefix for e in batch])
            total, breakdown = self.computer.compute(probs, targets, keep, scores)

        step = self.optimizer.step_count + 1
        if not breakdown.is_finite():
            path = self._dump_batch(step, batch, breakdown.to_dict(), scores)
            raise NumericError(ErrorMessages.NON_FINITE_LOSS.format(step=step), path)

        grads = backward(tape, total, leaves=[p for _, p in self.optimizer.params])
        norm = self.optimizer.step(grads, clip_norm=self.config.train.clip_norm)
        if scores is not None:
            self.contanic_history.append(breakdown.contanic_score)
        self.logger.debug(f"step {step}: loss {breakdown.l_total:.6f} grad norm {norm:.3e}")
        return StepRecord(step=step, variant=self.config.loss.variant, breakdown=breakdown, epoch=epoch)

    def _dump_batch(
        self, step: int, batch: Sequence[EncodedExample], breakdown: dict, scores: Optional[np.ndarray]
    ) -> Optional[str]:
        if self.files is None:
            return None
        path = self.files.path(Paths.DIAGNOSTIC_FILE)
        self.files.write_json_file(
            path,
            {
                "step": step,
                "variant": self.config.loss.variant,
                "breakdown": {k: repr(v) for k, v in breakdown.items()},
                "contanic": scores.tolist() if scores is not None else None,
                "examples": [e.example.to_dict() for e in batch],
            },
        )
        self.logger.error(f"Non-finite loss at step {step}; batch written to {path}")
        return str(path)

    # ------------------------------------------------------------------
    # Loop
    # ------------------------------------------------------------------
    def train(
        self,
        model: DialogueTransformer,
        train_examples: Sequence[TrainingExample],
        validation_examples: Optional[Sequence[TrainingExample]] = None,
        resume: Optional[CheckpointState] = None,
    ) -> Tuple[DialogueTransformer, RunLog]:
        """
        Train ``model`` in place and return it with the run log.

        Stops after ``epochs`` epochs or ``max_steps`` optimizer steps,
        whichever comes first. With a run directory, step records go to
        ``run_log.jsonl``, epoch summaries to ``epochs.jsonl``, a checkpoint is
        written after every epoch and a final one when training stops.
        """
        if not train_examples:
            raise ValidationError("training needs at least one example")
        train = self.config.train
        self._setup(model)
        if self.config.loss.needs_scores or self.config.provider.kind == "intrinsic":
            self._ensure_provider()

        start_epoch, start_batch = 0, 0
        if resume is not None:
            self._restore(resume)
            start_epoch, start_batch = resume.epoch, resume.batch_index
            self.logger.info(f"Resuming at epoch {start_epoch + 1}, batch {start_batch}, step {resume.step}")
        elif self.files is not None:
            self.files.delete_file(self.files.path(Paths.RUN_LOG_FILE))
            self.files.delete_file(self.files.path(Paths.EPOCH_LOG_FILE))

        encoded = encode_examples(self.vocab, train_examples, model.config.max_target_length)
        batch_count = (len(encoded) + train.batch_size - 1) // train.batch_size
        run_log = RunLog()
        assert self.optimizer is not None
        self.logger.info(
            f"Training {self.config.loss.variant} on {len(encoded)} examples, "
            f"{batch_count} batches/epoch, {model.num_parameters()} parameters"
        )

        epoch, batch_index = start_epoch, start_batch
        stopped = False
        while epoch < train.epochs and not stopped:
            order = epoch_order(train.seed, epoch, len(encoded), train.shuffle)
            started = time.perf_counter()
            losses: List[float] = []
            with tqdm(
                total=batch_count, initial=batch_index, desc=f"epoch {epoch + 1}", disable=not train.progress
            ) as bar:
                while batch_index < batch_count:
                    if train.max_steps is not None and self.optimizer.step_count >= train.max_steps:
                        stopped = True
                        break
                    rows = order[batch_index * train.batch_size : (batch_index + 1) * train.batch_size]
                    record = self.train_step([encoded[i] for i in rows], epoch=epoch + 1)
                    run_log.add_step(record)
                    losses.append(record.breakdown.l_total)
                    if self.files is not None:
                        self.files.append_jsonl_record(self.files.path(Paths.RUN_LOG_FILE), record.to_dict())
                    batch_index += 1
                    bar.update(1)
                    bar.set_postfix(loss=f"{record.breakdown.l_total:.4f}")
            if stopped:
                break

            epoch += 1
            batch_index = 0
            self._finish_epoch(epoch, run_log, losses, time.perf_counter() - started, validation_examples)

        if self.files is not None:
            final = self.files.get_checkpoint_dir() / Paths.FINAL_CHECKPOINT
            self.checkpoints.save(final, self.checkpoint_state(epoch, batch_index))
        self.logger.info(f"Training stopped after {self.optimizer.step_count} steps")
        return model, run_log

    def _finish_epoch(
        self,
        epoch: int,
        run_log: RunLog,
        losses: List[float],
        seconds: float,
        validation_examples: Optional[Sequence[TrainingExample]],
    ) -> None:
        assert self.model is not None and self.optimizer is not None
        if isinstance(self.provider, IntrinsicEmbedder):
            self.provider.refresh(self.model)

        validation = None
        if validation_examples and self.config.train.validate_every_epoch:
            report = self.evaluate(validation_examples)
            validation = report.means
        record = EpochRecord(
            epoch=epoch,
            steps=self.optimizer.step_count,
            wall_clock_seconds=seconds,
            mean_loss=float(np.mean(losses)) if losses else 0.0,
            validation=validation,
        )
        run_log.add_epoch(record)
        self.logger.info(f"Epoch {epoch} done in {seconds:.1f}s, mean loss {record.mean_loss:.4f}")

        if self.files is not None:
            self.files.append_jsonl_record(self.files.path(Paths.EPOCH_LOG_FILE), record.to_dict())
            path = self.files.get_checkpoint_dir() / Paths.checkpoint_name(epoch)
            self.checkpoints.save(path, self.checkpoint_state(epoch, 0))

    def evaluate(self, examples: Sequence[TrainingExample]) -> ScoreReport:
        """Evaluate the current model on ``examples`` with the run's provider and weights."""
        assert self.model is not None
        return evaluate_corpus(
            self.model,
            self.vocab,
            examples,
            self._ensure_provider(),
            self.config.evaluation,
            self.config.loss.weights,
            self.config.train.decode_margin,
            self.config.train.batch_size,
        )

    def write_report(self, report: ScoreReport, stem: Optional[str] = None) -> Path:
        """Write the JSON and CSV report into the run directory; ``stem`` renames both files."""
        if self.files is None:
            raise ValidationError("writing a report needs a run directory")
        return write_report(self.files, report, stem)


def write_report(files: FileService, report: ScoreReport, stem: Optional[str] = None) -> Path:
    json_name, csv_name = (Paths.REPORT_JSON, Paths.REPORT_CSV) if stem is None else (f"{stem}.json", f"{stem}.csv")
    json_path = files.path(json_name)
    files.write_json_file(json_path, report.to_dict())
    files.write_csv_file(files.path(csv_name), report.csv_header(), report.csv_rows())
    return json_path
