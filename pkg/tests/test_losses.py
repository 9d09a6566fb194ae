"""Tests for cross-entropy and the Contanic-weighted loss family."""

import numpy as np
import pytest

from semlogue.autodiff import TapeGraph, Tensor, backward
from semlogue.config.settings import LossDefaults
from semlogue.models.configs import LossConfig
from semlogue.nn.bse import BaselineEstimator
from semlogue.nn.optim import AdamW
from semlogue.services.gradcheck_service import check_loss_gradients
from semlogue.services.loss_service import (
    LossComputer,
    cross_entropy,
    l_bse,
    l_scl,
    semtextuallogue_total,
    weighted_contanic_ce,
)
from semlogue.utils.exceptions import ValidationError

VOCAB = 6
LENGTHS = [4, 2, 3]
SCORES = np.array([0.2, 0.9, 0.5])


def _batch(seed=0):
    """Leaf logits [3, 4, 6], random targets and a ragged keep mask."""
    rng = np.random.default_rng(seed)
    logits = Tensor(rng.normal(size=(len(LENGTHS), 4, VOCAB)), requires_grad=True)
    targets = rng.integers(0, VOCAB, size=(len(LENGTHS), 4))
    mask = np.arange(4)[None, :] < np.array(LENGTHS)[:, None]
    return logits, targets, mask


def _reference_ce(logits, targets, mask):
    probs = np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True)
    picked = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    rows = [-np.log(picked[i][mask[i]]).mean() for i in range(len(mask)) if mask[i].any()]
    return float(np.mean(rows))


def _grads(loss_fn, logits, extra=()):
    with TapeGraph() as tape:
        total = loss_fn(logits.softmax(axis=-1))
    grads = backward(tape, total, leaves=[logits, *extra])
    return total, grads


class TestCrossEntropy:
    """Test cases for padded cross-entropy."""

    def test_matches_reference(self):
        """Test the value is the mean of per-example token-mean NLL."""
        logits, targets, mask = _batch()
        loss = cross_entropy(logits.softmax(axis=-1), targets, mask)
        assert loss.item() == pytest.approx(_reference_ce(logits.data, targets, mask), rel=1e-12)

    def test_ragged_rows_weigh_equally(self):
        """Test a short row counts as much as a long one, unlike a pooled token mean."""
        logits, targets, mask = _batch()
        probs = np.exp(logits.data) / np.exp(logits.data).sum(axis=-1, keepdims=True)
        nll = -np.log(np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0])
        pooled = float(nll[mask].mean())
        loss = cross_entropy(logits.softmax(axis=-1), targets, mask).item()
        assert loss != pytest.approx(pooled, rel=1e-9)
        assert loss == pytest.approx(np.mean([nll[i][mask[i]].mean() for i in range(len(mask))]), rel=1e-12)

    def test_padding_ignored(self):
        """Test target ids at pad positions do not change the loss."""
        logits, targets, mask = _batch()
        changed = np.where(mask, targets, (targets + 1) % VOCAB)
        probs = logits.softmax(axis=-1)
        assert cross_entropy(probs, targets, mask).item() == cross_entropy(probs, changed, mask).item()

    def test_empty_row_excluded(self):
        """Test a row with no target positions is left out of the mean."""
        logits, targets, mask = _batch()
        mask[1] = False
        loss = cross_entropy(logits.softmax(axis=-1), targets, mask)
        assert loss.item() == pytest.approx(_reference_ce(logits.data, targets, mask), rel=1e-12)

    def test_all_padding_rejected(self):
        """Test a batch with only padding is an error."""
        logits, targets, mask = _batch()
        with pytest.raises(ValidationError, match="all padding"):
            cross_entropy(logits.softmax(axis=-1), targets, np.zeros_like(mask))


class TestWeightedContanicCE:
    """Test cases for the Contanic-weighted cross-entropy."""

    def test_gradient_is_scaled_ce_gradient(self):
        """Test each example's gradient is (1 - c_i) times its CE gradient."""
        logits, targets, mask = _batch()
        _, ce_grads = _grads(lambda p: cross_entropy(p, targets, mask), logits)
        _, weighted = _grads(lambda p: weighted_contanic_ce(p, targets, mask, SCORES), logits)
        expected = ce_grads[logits].data * (1.0 - SCORES)[:, None, None]
        np.testing.assert_allclose(weighted[logits].data, expected, rtol=1e-12, atol=1e-15)

    def test_perfect_scores_vanish(self):
        """Test a score of 1 everywhere gives zero loss and zero gradient."""
        logits, targets, mask = _batch()
        total, grads = _grads(lambda p: weighted_contanic_ce(p, targets, mask, np.ones(3)), logits)
        assert total.item() == 0.0
        assert not grads[logits].data.any()

    def test_scores_out_of_range(self):
        """Test scores outside [0, 1] are rejected."""
        logits, targets, mask = _batch()
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            weighted_contanic_ce(logits.softmax(axis=-1), targets, mask, np.array([0.1, 1.5, 0.2]))


class TestEstimatorTerms:
    """Test cases for L_SCL, L_BSE and their combination."""

    def test_l_scl_and_l_bse(self):
        """Test both terms against direct numpy formulas."""
        bse = Tensor(np.array([0.25, 0.5, 0.75]))
        ce = Tensor(np.array([2.0, 1.0, 4.0]))
        assert l_scl(bse, ce).item() == pytest.approx((0.75 * 2 + 0.5 * 1 + 0.25 * 4) / 3)
        assert l_bse(bse, np.array([0.25, 0.5, 0.75])).item() == 0.0
        assert l_bse(bse, np.zeros(3)).item() == pytest.approx((0.0625 + 0.25 + 0.5625) / 3)

    def test_total_combination(self):
        """Test lambda and sigma weigh the three terms."""
        assert semtextuallogue_total(2.0, 1.0, 0.5, 0.5, 1.0) == pytest.approx(2.0)
        assert semtextuallogue_total(2.0, 1.0, 0.5, 1.0, 0.0) == 2.0
        with pytest.raises(ValidationError):
            semtextuallogue_total(2.0, 1.0, 0.5, 1.2, 0.0)

    @pytest.mark.slow
    def test_estimator_learns_fixed_targets(self):
        """Test the estimator trained on L_BSE alone tracks fixed Contanic targets."""
        rng = np.random.default_rng(0)
        logits = 3.0 * rng.normal(size=(8, 3, VOCAB))
        dists = Tensor(np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True))
        mask = np.ones((8, 3), dtype=bool)
        targets = dists.data.mean(axis=1) @ np.linspace(0.1, 0.9, VOCAB)

        estimator = BaselineEstimator(VOCAB, hidden=16, seed=0)
        optimizer = AdamW(list(estimator.named_parameters()), lr=1e-2, weight_decay=0.0)
        for _ in range(2000):
            with TapeGraph() as tape:
                loss = l_bse(estimator(dists, mask), targets)
            optimizer.step(backward(tape, loss, leaves=estimator.parameters()))

        predicted = estimator(dists, mask).numpy()
        assert np.mean(np.abs(predicted - targets)) < 0.05


class TestLossComputer:
    """Test cases for variant assembly."""

    @staticmethod
    def _computer(variant, lambda_=0.5, sigma=1.0, seed=1):
        config = LossConfig(variant=variant, lambda_=lambda_, sigma=sigma, bse_hidden=4)
        estimator = BaselineEstimator(VOCAB, 4, seed=seed) if config.uses_estimator else None
        return LossComputer(config, estimator)

    @pytest.mark.parametrize("variant", LossDefaults.VARIANTS)
    def test_breakdown_recomposes(self, variant):
        """Test the reported total equals the recomposed components."""
        logits, targets, mask = _batch()
        computer = self._computer(variant)
        total, breakdown = computer.compute(logits.softmax(axis=-1), targets, mask, SCORES)
        assert breakdown.l_total == total.item()
        assert breakdown.recomposed(variant, 0.5, 1.0) == pytest.approx(breakdown.l_total, rel=1e-12)
        assert breakdown.is_finite()

    def test_additive_has_ce_gradient(self):
        """Test the additive Contanic term shifts the value but not the gradient."""
        logits, targets, mask = _batch()
        computer = self._computer("additive-ce")
        total, grads = _grads(lambda p: computer.compute(p, targets, mask, SCORES)[0], logits)
        ce_total, ce_grads = _grads(lambda p: cross_entropy(p, targets, mask), logits)
        assert total.item() == pytest.approx(ce_total.item() + SCORES.mean())
        np.testing.assert_array_equal(grads[logits].data, ce_grads[logits].data)

    def test_pure_ce_setting_matches_ce(self):
        """Test lambda 1 and sigma 0 reduce SemTextualLogue to CE exactly."""
        logits, targets, mask = _batch()
        computer = self._computer("semtextuallogue", lambda_=1.0, sigma=0.0)
        total, grads = _grads(lambda p: computer.compute(p, targets, mask, SCORES)[0], logits)
        ce_total, ce_grads = _grads(lambda p: cross_entropy(p, targets, mask), logits)
        assert total.item() == ce_total.item()
        np.testing.assert_array_equal(grads[logits].data, ce_grads[logits].data)

    def test_scl_does_not_train_estimator(self):
        """Test only L_BSE reaches the live estimator's parameters."""
        logits, targets, mask = _batch()
        silent = self._computer("semtextuallogue", lambda_=0.5, sigma=0.0)
        params = silent.bse.parameters()
        _, grads = _grads(lambda p: silent.compute(p, targets, mask, SCORES)[0], logits, params)
        assert all(not grads[p].data.any() for p in params)

        active = self._computer("semtextuallogue", lambda_=0.5, sigma=1.0)
        params = active.bse.parameters()
        _, grads = _grads(lambda p: active.compute(p, targets, mask, SCORES)[0], logits, params)
        assert any(grads[p].data.any() for p in params)

    def test_scores_clamped(self):
        """Test Contanic scores are clamped into [0, 1] before use."""
        logits, targets, mask = _batch()
        computer = self._computer("weighted-semantic-ce")
        _, clamped = computer.compute(logits.softmax(axis=-1), targets, mask, np.array([-0.5, 1.5, 0.5]))
        _, plain = computer.compute(logits.softmax(axis=-1), targets, mask, np.array([0.0, 1.0, 0.5]))
        assert clamped.l_total == plain.l_total

    def test_missing_requirements(self):
        """Test estimator variants need an estimator and non-CE variants need scores."""
        with pytest.raises(ValidationError, match="baseline estimator"):
            LossComputer(LossConfig(variant="semtextuallogue"))
        logits, targets, mask = _batch()
        with pytest.raises(ValidationError, match="Contanic scores"):
            self._computer("additive-ce").compute(logits.softmax(axis=-1), targets, mask)


class TestLossGradientCheck:
    """Finite-difference checks of every variant on the micro model."""

    @pytest.mark.parametrize("variant", LossDefaults.VARIANTS)
    def test_variant_passes(self, variant):
        """Test analytic gradients agree with central differences."""
        report = check_loss_gradients(variant, seed=0, entries_per_param=3)
        assert report.passed, report.to_dict()
        assert report.checked > 0

    def test_decoder_only(self):
        """Test the decoder-only shape passes for SemTextualLogue."""
        report = check_loss_gradients("semtextuallogue", seed=1, entries_per_param=3, architecture="decoder-only")
        assert report.passed, report.to_dict()
