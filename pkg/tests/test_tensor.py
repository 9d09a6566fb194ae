"""Tests for the tensor core and its primitives."""

import numpy as np
import pytest

from semlogue.autodiff import (
    Function,
    TapeGraph,
    Tensor,
    apply_primitive,
    backward,
    concat,
    embedding_lookup,
    gather,
    grad_check,
    layer_norm,
    no_grad,
    relative_difference,
    softmax_nll,
)
from semlogue.config.settings import Numerics
from semlogue.utils.exceptions import GradCheckError, GraphError, ShapeError


def _param(shape, seed=0, low=None):
    rng = np.random.default_rng(seed)
    data = rng.uniform(low, 2.0, size=shape) if low is not None else rng.normal(size=shape)
    return Tensor(data, requires_grad=True)


class TestForwardAndBackward:
    """Test cases for forward values and reverse sweeps."""

    def test_product_gradient(self):
        """Test d/dx sum(x * y) equals y."""
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        y = Tensor([4.0, 5.0, 6.0], requires_grad=True)
        with TapeGraph() as tape:
            loss = (x * y).sum()
        grads = backward(tape, loss)

        assert loss.item() == 32.0
        np.testing.assert_array_equal(grads[x].data, [4.0, 5.0, 6.0])
        np.testing.assert_array_equal(grads[y].data, [1.0, 2.0, 3.0])

    def test_broadcast_gradient_is_reduced(self):
        """Test a broadcast operand receives the summed gradient in its own shape."""
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.zeros(3), requires_grad=True)
        with TapeGraph() as tape:
            loss = (a + b).sum()
        grads = backward(tape, loss)

        assert grads[b].shape == (3,)
        np.testing.assert_array_equal(grads[b].data, [2.0, 2.0, 2.0])

    def test_reused_tensor_accumulates(self):
        """Test a tensor used twice gets both contributions."""
        x = Tensor([3.0], requires_grad=True)
        with TapeGraph() as tape:
            loss = (x * x + x).sum()
        grads = backward(tape, loss)

        np.testing.assert_allclose(grads[x].data, [7.0])

    def test_unused_leaf_gets_zero_gradient(self):
        """Test leaves listed explicitly but never touched get zeros."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        unused = Tensor(np.ones((2, 2)), requires_grad=True)
        with TapeGraph() as tape:
            loss = x.sum()
        grads = backward(tape, loss, leaves=[x, unused])

        np.testing.assert_array_equal(grads[unused].data, np.zeros((2, 2)))

    def test_constants_get_no_gradient(self):
        """Test tensors without requires_grad never appear in the result."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        c = Tensor([5.0, 5.0])
        with TapeGraph() as tape:
            loss = (x * c).sum()
        grads = backward(tape, loss)

        assert x in grads
        assert c not in grads

    def test_detach_stops_gradient(self):
        """Test a detached copy is a constant."""
        x = Tensor([2.0], requires_grad=True)
        with TapeGraph() as tape:
            loss = (x * x.detach()).sum()
        grads = backward(tape, loss)

        np.testing.assert_allclose(grads[x].data, [2.0])

    def test_no_grad_records_nothing(self):
        """Test operations inside no_grad stay off the tape."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with TapeGraph() as tape:
            with no_grad():
                y = (x * 2.0).sum()
        assert len(tape) == 0
        assert not y.requires_grad

    def test_non_scalar_root_rejected(self):
        """Test backward refuses a non-scalar root."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with TapeGraph() as tape:
            y = x * 2.0
        with pytest.raises(GraphError, match="scalar"):
            backward(tape, y)

    def test_root_from_other_tape_rejected(self):
        """Test backward refuses a root recorded on a different tape."""
        x = Tensor([1.0], requires_grad=True)
        with TapeGraph() as first:
            y = (x * 2.0).sum()
        with TapeGraph() as second:
            (x * 3.0).sum()
        assert len(first) > 0
        with pytest.raises(GraphError):
            backward(second, y)

    def test_division_only_by_scalars(self):
        """Test tensor / tensor is refused."""
        x = Tensor([1.0, 2.0])
        assert np.allclose((x / 2).data, [0.5, 1.0])
        with pytest.raises(TypeError):
            x / Tensor([1.0, 2.0])

    def test_clamped_log(self):
        """Test log clamps zeros at the floor and passes no gradient there."""
        x = Tensor([0.0, 1.0], requires_grad=True)
        with TapeGraph() as tape:
            loss = x.log().sum()
        grads = backward(tape, loss)

        assert loss.item() == pytest.approx(np.log(Numerics.LOG_CLAMP))
        np.testing.assert_array_equal(grads[x].data, [0.0, 1.0])


class TestPrimitives:
    """Test cases for individual primitives."""

    def test_softmax_rows_sum_to_one(self):
        """Test softmax normalizes along the last axis and survives large logits."""
        x = Tensor(np.array([[1000.0, 1000.0], [0.0, np.log(3.0)]]))
        probs = x.softmax(axis=-1).data
        np.testing.assert_allclose(probs.sum(axis=-1), [1.0, 1.0])
        np.testing.assert_allclose(probs[1], [0.25, 0.75])

    def test_softmax_nll_matches_composition(self):
        """Test the fused NLL equals -log(softmax) picked at the targets."""
        logits = _param((3, 5), seed=base + 1)
        targets = np.array([0, 4, 2])
        fused = softmax_nll(logits, targets).data
        composed = -gather(logits.softmax(axis=-1).log(), targets).data
        np.testing.assert_allclose(fused, composed, rtol=1e-10)

    def test_gather_picks_last_axis(self):
        """Test gather selects one entry per row."""
        x = Tensor(np.arange(12.0).reshape(2, 2, 3))
        picked = gather(x, np.array([[0, 2], [1, 1]])).data
        np.testing.assert_array_equal(picked, [[0.0, 5.0], [7.0, 10.0]])

    def test_embedding_lookup_scatters_gradient(self):
        """Test repeated ids accumulate into the same embedding row."""
        weight = Tensor(np.zeros((4, 2)), requires_grad=True)
        with TapeGraph() as tape:
            loss = embedding_lookup(weight, np.array([[1, 1, 3]])).sum()
        grads = backward(tape, loss)

        np.testing.assert_array_equal(grads[weight].data[:, 0], [0.0, 2.0, 0.0, 1.0])

    def test_incompatible_shapes(self):
        """Test a shape mismatch names the primitive and both shapes."""
        with pytest.raises(ShapeError, match=r"add: incompatible shapes \[2, 3\] vs \[4\]"):
            Tensor(np.ones((2, 3))) + Tensor(np.ones(4))

    def test_matmul_shape_error(self):
        """Test matmul refuses mismatched inner dimensions."""
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    def test_out_of_range_ids(self):
        """Test token ids outside the table raise ShapeError."""
        weight = Tensor(np.zeros((4, 2)))
        with pytest.raises(ShapeError, match="out of range"):
            embedding_lookup(weight, np.array([4]))
        with pytest.raises(ShapeError, match="out of range"):
            gather(Tensor(np.zeros((2, 3))), np.array([0, 3]))

    def test_unknown_primitive(self):
        """Test apply_primitive refuses unknown names."""
        with pytest.raises(ShapeError, match="unknown primitive"):
            apply_primitive("fourier", Tensor([1.0]))

    def test_apply_primitive_by_name(self):
        """Test primitives are reachable by name."""
        out = apply_primitive("add", Tensor([1.0]), Tensor([2.0]))
        assert out.item() == 3.0


def _builders(seed=0):
    base = 1000 * seed
    rng = np.random.default_rng(base + 7)
    weights = {shape: Tensor(rng.normal(size=shape)) for shape in [(2, 3, 4), (2, 3, 3), (2, 4), (2, 3), (2, 2), (5, 3)]}

    def project(out):
        return (out * weights[out.shape]).sum()

    x = _param((2, 3, 4), seed=base + 1)
    y = _param((4,), seed=base + 2)
    m = _param((2, 3), seed=base + 3)
    n = _param((3, 4), seed=base + 4)
    positive = _param((2, 3, 4), seed=base + 5, low=0.5)
    away = Tensor(np.where(np.abs(x.data) < 0.1, 0.5, x.data), requires_grad=True)
    gamma = _param((4,), seed=base + 6)
    beta = _param((4,), seed=base + 8)
    table = _param((6, 3), seed=base + 9)
    ids = np.array([[0, 5, 5], [2, 1, 0]])
    targets = np.array([[0, 3, 1], [2, 2, 0]])

    return {
        "add": (lambda: project(x + y), [x, y]),
        "sub": (lambda: project(x - y), [x, y]),
        "mul": (lambda: project(x * y), [x, y]),
        "pow": (lambda: project(x**2), [x]),
        "matmul": (lambda: project(m @ n), [m, n]),
        "batched_matmul": (lambda: project(x @ n.transpose(1, 0)), [x, n]),
        "transpose": (lambda: project(x.transpose(0, 2, 1).transpose(0, 2, 1)), [x]),
        "reshape": (lambda: project(x.reshape(2, 12).reshape(2, 3, 4)), [x]),
        "concat": (lambda: project(concat([m, m * 2.0, m[:1]], axis=0)), [m]),
        "slice": (lambda: project(x[:, 1:3, ::2].sum(axis=2)), [x]),
        "relu": (lambda: project(away.relu()), [away]),
        "tanh": (lambda: project(x.tanh()), [x]),
        "sigmoid": (lambda: project(x.sigmoid()), [x]),
        "softmax": (lambda: project(x.softmax(axis=-1)), [x]),
        "log_softmax": (lambda: project(x.log_softmax(axis=-1)), [x]),
        "log": (lambda: project(positive.log()), [positive]),
        "layer_norm": (lambda: project(layer_norm(x, gamma, beta)), [x, gamma, beta]),
        "mean": (lambda: project(x.mean(axis=1)), [x]),
        "embedding": (lambda: project(embedding_lookup(table, ids)), [table]),
        "gather": (lambda: project(gather(x, np.array([[0, 3, 1], [2, 2, 0]]))), [x]),
        "softmax_nll": (lambda: project(softmax_nll(x[:, :, :4], targets)), [x]),
    }


_SEEDS = [0, 1, 2] + [pytest.param(seed, marks=pytest.mark.slow) for seed in range(3, 100)]


class TestPrimitiveGradients:
    """Finite-difference checks of every primitive's backward."""

    @pytest.mark.parametrize("seed", _SEEDS)
    @pytest.mark.parametrize("name", sorted(_builders()))
    def test_primitive_gradient(self, name, seed):
        """Test analytic and numeric gradients agree for each primitive and input draw."""
        function, params = _builders(seed)[name]
        report = grad_check(function, params)
        assert report.passed, report.to_dict()
        assert report.checked == sum(p.size for p in params)

    @pytest.mark.parametrize("name", sorted(_builders()))
    def test_backward_is_bitwise_deterministic(self, name):
        """Test two reverse sweeps over the same graph give identical bits."""
        function, params = _builders()[name]
        sweeps = []
        for _ in range(2):
            with TapeGraph() as tape:
                loss = function()
            grads = backward(tape, loss)
            sweeps.append([grads[p].data.copy() for p in params])
        for first, second in zip(*sweeps):
            assert np.array_equal(first, second)

    @pytest.mark.parametrize("axis", [None, 0, 1, 2, (0, 2)])
    def test_mean_is_sum_over_count(self, axis):
        """Test mean equals sum divided by the element count, exactly."""
        x = _param((2, 3, 4), seed=11)
        count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
        assert np.array_equal(x.mean(axis=axis).data, x.sum(axis=axis).data / count)


class WrongSquare(Function):
    """x^2 with a backward missing its factor of two."""

    name = "wrong_square"

    def forward(self, x):
        self.saved["x"] = x
        return x * x

    def backward(self, grad):
        return (grad * self.saved["x"],)


class TestGradCheck:
    """Test cases for the gradient checker itself."""

    def test_relative_difference(self):
        """Test the relative difference definition."""
        assert relative_difference(1.0, 1.0) == 0.0
        assert relative_difference(2.0, 1.0) == pytest.approx(0.5)
        assert relative_difference(0.0, 0.0) == 0.0

    def test_detects_wrong_backward(self):
        """Test a wrong analytic gradient fails the check."""
        p = Tensor([1.0, 1.5, 2.0], requires_grad=True)
        report = grad_check(lambda: WrongSquare.apply(p).sum(), [p])

        assert not report.passed
        assert report.parameters[0].failed == 3
        assert report.max_rel_diff == pytest.approx(0.5, rel=1e-3)

    def test_kink_is_excluded(self):
        """Test an entry sitting on the ReLU kink is excluded, not failed."""
        p = Tensor([0.0, 1.0], requires_grad=True)
        report = grad_check(lambda: p.relu().sum(), [p])

        assert report.passed
        assert report.excluded == 1

    def test_subset_sampling(self):
        """Test entries_per_param limits the checked entries."""
        p = _param((10, 10), seed=base + 2)
        report = grad_check(lambda: (p * p).sum(), [p], entries_per_param=7)
        assert report.checked == 7
        assert report.passed

    def test_parameters_restored(self):
        """Test parameter data is unchanged after the check."""
        p = _param((3, 3), seed=base + 4)
        before = p.data.copy()
        grad_check(lambda: p.tanh().sum(), [p])
        np.testing.assert_array_equal(p.data, before)

    def test_non_scalar_function(self):
        """Test a non-scalar function is refused."""
        p = _param((2,), seed=base + 0)
        with pytest.raises(GradCheckError, match="scalar"):
            grad_check(lambda: p * 2.0, [p])

    def test_non_deterministic_function(self):
        """Test a function that changes between evaluations is refused."""
        p = _param((2,), seed=base + 0)
        rng = np.random.default_rng(0)
        with pytest.raises(GradCheckError, match="deterministic"):
            grad_check(lambda: (p * float(rng.normal())).sum(), [p])

    def test_report_serializes(self):
        """Test the report dictionary carries the summary fields."""
        p = _param((2,), seed=base + 0)
        data = grad_check(lambda: (p * p).sum(), [p], names=["p"]).to_dict()
        assert data["passed"] is True
        assert data["parameters"][0]["name"] == "p"
        assert data["checked"] == 2
