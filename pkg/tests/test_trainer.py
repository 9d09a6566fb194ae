"""Tests for the training loop, resume and corpus evaluation."""

import json
from dataclasses import replace

import numpy as np
import pytest

from semlogue.config.settings import LossDefaults, Paths, SpecialTokens
from semlogue.models.configs import DialuationWeights
from semlogue.models.vocab import Vocab
from semlogue.nn import DialogueTransformer
from semlogue.services.checkpoint_service import CheckpointService
from semlogue.services.loss_service import LossComputer
from semlogue.services.metrics_service import text_tokens
from semlogue.services.trainer_service import (
    TrainerService,
    decode_limits,
    encode_examples,
    epoch_order,
    evaluate_corpus,
)
from semlogue.utils.exceptions import NumericError, ValidationError


def _run(config, vocab, examples, run_dir=None, resume=None, validation=None):
    model = DialogueTransformer(config.model_config(len(vocab)))
    trainer = TrainerService(config, vocab, str(run_dir) if run_dir else None)
    model, log = trainer.train(model, examples, validation, resume=resume)
    return trainer, model, log


def _states_equal(a, b):
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


class TestHelpers:
    """Test cases for epoch ordering and decode caps."""

    def test_epoch_order_is_pure(self):
        """Test the order depends only on seed and epoch."""
        np.testing.assert_array_equal(epoch_order(3, 1, 20), epoch_order(3, 1, 20))
        assert not np.array_equal(epoch_order(3, 0, 20), epoch_order(3, 1, 20))
        assert sorted(epoch_order(3, 0, 20)) == list(range(20))
        np.testing.assert_array_equal(epoch_order(3, 5, 4, shuffle=False), np.arange(4))

    def test_decode_limits(self):
        """Test caps are gold length plus margin, bounded by the target maximum."""
        assert decode_limits([[5, 6], [7] * 30], margin=2, max_target_length=24) == [4, 24]

    def test_encode_examples(self, synthetic_vocab, synthetic_examples):
        """Test teacher forcing pairs are built from the gold ids."""
        encoded = encode_examples(synthetic_vocab, synthetic_examples[:2], max_target_length=64)
        first = encoded[0]
        assert first.prefix == [SpecialTokens.BOS_ID] + first.gold
        assert first.targets == first.gold + [SpecialTokens.EOS_ID]


class TestTrainerService:
    """Test cases for TrainerService."""

    def test_deterministic(self, make_config, synthetic_vocab, synthetic_examples):
        """Test identical configs give identical loss sequences and parameters."""
        config = make_config("weighted-semantic-context-ce", max_steps=3)
        _, model_a, log_a = _run(config, synthetic_vocab, synthetic_examples)
        _, model_b, log_b = _run(config, synthetic_vocab, synthetic_examples)
        assert log_a.loss_sequence() == log_b.loss_sequence()
        assert _states_equal(model_a.state_dict(), model_b.state_dict())

    @pytest.mark.parametrize("steps", [4, pytest.param(100, marks=pytest.mark.slow)])
    def test_pure_ce_setting_follows_ce(self, make_config, synthetic_vocab, synthetic_examples, steps):
        """Test lambda 1 and sigma 0 reproduce the CE trajectory exactly."""
        ce = make_config("ce", max_steps=steps, epochs=20)
        stl = make_config("semtextuallogue", max_steps=steps, epochs=20)
        stl = replace(stl, loss=replace(stl.loss, lambda_=1.0, sigma=0.0))

        _, ce_model, ce_log = _run(ce, synthetic_vocab, synthetic_examples)
        _, stl_model, stl_log = _run(stl, synthetic_vocab, synthetic_examples)
        assert stl_log.ce_values() == ce_log.ce_values()
        assert [r.breakdown.l_total for r in stl_log.steps] == ce_log.ce_values()
        assert _states_equal(stl_model.state_dict(), ce_model.state_dict())

    def test_resume_matches_uninterrupted(self, make_config, synthetic_vocab, synthetic_examples, temp_dir):
        """Test stopping and resuming reproduces the uninterrupted run."""
        interrupted = make_config("semtextuallogue", epochs=3, max_steps=5)
        _run(interrupted, synthetic_vocab, synthetic_examples, run_dir=temp_dir / "a")
        state = CheckpointService().load(temp_dir / "a" / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT)
        assert state.step == 5

        full = make_config("semtextuallogue", epochs=3, max_steps=8)
        _, resumed_model, resumed_log = _run(
            full, synthetic_vocab, synthetic_examples, run_dir=temp_dir / "a", resume=state
        )
        _, model, log = _run(full, synthetic_vocab, synthetic_examples, run_dir=temp_dir / "b")

        assert [r.step for r in resumed_log.steps] == [6, 7, 8]
        assert resumed_log.loss_sequence() == log.loss_sequence()[5:]
        assert _states_equal(resumed_model.state_dict(), model.state_dict())

        lines = (temp_dir / "a" / Paths.RUN_LOG_FILE).read_text(encoding="utf-8").splitlines()
        assert [json.loads(line)["step"] for line in lines] == list(range(1, 9))

    def test_resume_needs_same_vocab(self, make_config, synthetic_vocab, synthetic_examples, temp_dir):
        """Test a checkpoint from another vocabulary cannot be resumed."""
        config = make_config("ce", max_steps=1)
        _run(config, synthetic_vocab, synthetic_examples, run_dir=temp_dir)
        state = CheckpointService().load(temp_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT)
        other = Vocab(list(synthetic_vocab.tokens[:-1]) + ["zzzz"])
        with pytest.raises(ValidationError, match="different vocabulary"):
            _run(config, other, synthetic_examples, resume=state)

    def test_run_directory_files(self, make_config, synthetic_vocab, synthetic_examples, temp_dir):
        """Test step and epoch logs and checkpoints are written."""
        _, _, log = _run(make_config("ce"), synthetic_vocab, synthetic_examples, run_dir=temp_dir)
        steps = (temp_dir / Paths.RUN_LOG_FILE).read_text(encoding="utf-8").splitlines()
        epochs = (temp_dir / Paths.EPOCH_LOG_FILE).read_text(encoding="utf-8").splitlines()
        assert len(steps) == len(log.steps) == (len(synthetic_examples) + 3) // 4
        assert json.loads(epochs[0])["epoch"] == 1
        assert (temp_dir / Paths.CHECKPOINT_DIR / Paths.checkpoint_name(1)).exists()
        assert (temp_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT).exists()

    def test_non_finite_loss(self, make_config, synthetic_vocab, synthetic_examples, temp_dir, monkeypatch):
        """Test a non-finite loss stops training and dumps the batch."""
        original = LossComputer.compute

        def broken(self, *args, **kwargs):
            total, breakdown = original(self, *args, **kwargs)
            return total, replace(breakdown, l_ce=float("nan"))

        monkeypatch.setattr(LossComputer, "compute", broken)
        with pytest.raises(NumericError, match="step 1") as info:
            _run(make_config("ce"), synthetic_vocab, synthetic_examples, run_dir=temp_dir)

        dump = json.loads((temp_dir / Paths.DIAGNOSTIC_FILE).read_text(encoding="utf-8"))
        assert info.value.diagnostic_path.endswith(Paths.DIAGNOSTIC_FILE)
        assert dump["step"] == 1
        assert len(dump["examples"]) == 4

    def test_loss_decreases(self, make_config, synthetic_vocab, synthetic_examples):
        """Test the mean epoch loss goes down over a few epochs."""
        _, _, log = _run(make_config("ce", epochs=3), synthetic_vocab, synthetic_examples)
        assert len(log.epochs) == 3
        assert log.epochs[-1].mean_loss < log.epochs[0].mean_loss

    def test_validation_each_epoch(self, make_config, synthetic_vocab, synthetic_examples):
        """Test epoch summaries carry validation means."""
        _, _, log = _run(
            make_config("ce", max_steps=20), synthetic_vocab, synthetic_examples[:8], validation=synthetic_examples[8:12]
        )
        assert 0.0 <= log.epochs[0].validation["dialuation"] <= 100.0

    def test_contanic_history(self, make_config, synthetic_vocab, synthetic_examples):
        """Test score-based variants record the batch Contanic means."""
        trainer, _, log = _run(make_config("additive-ce", max_steps=2), synthetic_vocab, synthetic_examples)
        assert len(trainer.contanic_history) == 2
        assert all(0.0 <= c <= 1.0 for c in trainer.contanic_history)
        assert log.steps[0].breakdown.contanic_score == trainer.contanic_history[0]

    def test_no_examples(self, make_config, synthetic_vocab):
        """Test training on nothing is refused."""
        with pytest.raises(ValidationError):
            _run(make_config("ce"), synthetic_vocab, [])

    def test_report_needs_run_dir(self, make_config, synthetic_vocab, synthetic_examples, temp_dir):
        """Test reports are written only with a run directory."""
        trainer, _, _ = _run(make_config("ce", max_steps=1), synthetic_vocab, synthetic_examples)
        report = trainer.evaluate(synthetic_examples[:3])
        with pytest.raises(ValidationError, match="run directory"):
            trainer.write_report(report)

    def test_report_file_names(self, make_config, synthetic_vocab, synthetic_examples, temp_dir):
        """Test the default report names and a custom stem."""
        trainer, _, _ = _run(make_config("ce", max_steps=1), synthetic_vocab, synthetic_examples, run_dir=temp_dir)
        report = trainer.evaluate(synthetic_examples[:3])
        assert trainer.write_report(report) == temp_dir / Paths.REPORT_JSON
        assert (temp_dir / Paths.REPORT_CSV).exists()
        assert trainer.write_report(report, "test_report") == temp_dir / "test_report.json"
        assert (temp_dir / "test_report.csv").exists()

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("variant", LossDefaults.VARIANTS)
    def test_loss_decreases_for_every_variant(self, make_config, synthetic_vocab, synthetic_examples, variant, seed):
        """Test the median CE of the last tenth of steps is below that of the first tenth."""
        config = make_config(variant, epochs=10, seed=seed)
        _, _, log = _run(config, synthetic_vocab, synthetic_examples[:16])
        ce = log.ce_values()
        tenth = max(1, len(ce) // 10)
        assert np.median(ce[-tenth:]) < np.median(ce[:tenth])

    @pytest.mark.slow
    @pytest.mark.parametrize("variant", LossDefaults.VARIANTS)
    def test_memorizes_small_corpus(self, make_config, synthetic_vocab, synthetic_examples, variant):
        """Test 500 steps on sixteen examples make greedy decoding return the gold responses."""
        config = make_config(variant, epochs=125, max_steps=500)
        config = replace(config, model={**config.model, "embed_dim": 32, "ff_dim": 64})
        examples = synthetic_examples[:16]
        _, model, log = _run(config, synthetic_vocab, examples)
        assert len(log.steps) == 500

        # Score-weighted variants stop pushing CE once a response is already right
        if variant in ("ce", "additive-ce", "semantic-reinforcement", "semtextuallogue"):
            assert np.mean(log.ce_values()[-4:]) < 0.01

        length = model.config.max_target_length
        encoded = encode_examples(synthetic_vocab, examples, length)
        outputs = model.generate_greedy([e.source for e in encoded], decode_limits([e.gold for e in encoded], 2, length))
        reproduced = sum(output == e.gold[:length] for output, e in zip(outputs, encoded))
        assert reproduced >= 15


class TestEvaluateCorpus:
    """Test cases for corpus evaluation of a model."""

    def test_report_shape(self, make_config, synthetic_vocab, synthetic_examples, tiny_model_config, hashed_provider):
        """Test every example gets a row with bounded metrics."""
        config = make_config("ce")
        model = DialogueTransformer(tiny_model_config)
        report = evaluate_corpus(model, synthetic_vocab, synthetic_examples[:5], hashed_provider, config.evaluation)
        assert report.count == 5
        assert all(0.0 <= row.metrics["dialuation"] <= 100.0 for row in report.rows)
        assert {"distinct1", "distinct2"} == set(report.distinct)

    def test_generation_respects_cap(self, synthetic_vocab, synthetic_examples, tiny_model_config, hashed_provider):
        """Test generations never exceed gold length plus margin."""
        model = DialogueTransformer(tiny_model_config)
        examples = synthetic_examples[:4]
        report = evaluate_corpus(model, synthetic_vocab, examples, hashed_provider, DialuationWeights(), decode_margin=1)
        for example, row in zip(examples, report.rows):
            gold_ids = len(text_tokens(example.gold_text))
            assert len(row.generated.split()) <= gold_ids + 1

    def test_requires_examples(self, synthetic_vocab, tiny_model_config, hashed_provider):
        """Test an empty evaluation set is refused."""
        with pytest.raises(ValidationError):
            evaluate_corpus(DialogueTransformer(tiny_model_config), synthetic_vocab, [], hashed_provider, DialuationWeights())
