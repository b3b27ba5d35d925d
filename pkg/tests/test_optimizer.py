"""Tests for Adam and the learning-rate schedule."""

import numpy as np
import pytest

from autograd import ops
from autograd.tensor import Graph, Tensor, backward
from core.exceptions import FrozenParameterError, InvalidArgumentError, ShapeError
from model.params import ParameterSet
from training.optimizer import Adam, AdamState, adam_step, lr_schedule


@pytest.mark.parametrize(
    "epoch, expected",
    [(1, 0.0002), (20, 0.0002), (21, 0.00019), (30, 0.0001), (40, 0.0)],
)
def test_published_schedule(epoch, expected):
    """Constant for 20 epochs, then linear decay to zero at epoch 40."""
    assert lr_schedule(epoch, 0.0002) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("epoch", [0, 41, -3])
def test_schedule_rejects_out_of_range_epoch(epoch):
    with pytest.raises(InvalidArgumentError):
        lr_schedule(epoch, 0.0002)


def test_schedule_without_constant_phase():
    assert lr_schedule(1, 1.0, total_epochs=4, constant_epochs=0) == pytest.approx(0.75)


def test_zero_gradient_leaves_parameters_unchanged():
    w = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    adam_step({"w": w}, {"w": np.zeros(3)}, AdamState(), lr=0.1)
    np.testing.assert_array_equal(w.data, [1.0, -2.0, 3.0])


def test_first_step_moves_by_learning_rate_against_gradient():
    """Bias correction makes the first update lr * sign(g)."""
    w = Tensor(np.zeros(3), requires_grad=True)
    adam_step({"w": w}, {"w": np.array([0.5, -4.0, 2.0])}, AdamState(), lr=0.01)
    np.testing.assert_allclose(w.data, [-0.01, 0.01, -0.01], rtol=1e-6)


def test_gradient_shape_mismatch():
    w = Tensor(np.zeros(3), requires_grad=True)
    with pytest.raises(ShapeError, match="adam_step"):
        adam_step({"w": w}, {"w": np.zeros(2)}, AdamState(), lr=0.1)


def test_frozen_parameter_refused():
    w = Tensor(np.zeros(3), requires_grad=False)
    with pytest.raises(FrozenParameterError, match="w"):
        adam_step({"w": w}, {"w": np.ones(3)}, AdamState(), lr=0.1)


def test_adam_skips_frozen_sets():
    rng = np.random.default_rng(0)
    live = ParameterSet("live")
    live.create("w", (2,), rng, fan_in=2)
    frozen = ParameterSet("frozen")
    frozen.create("w", (2,), rng, fan_in=2)
    frozen.freeze()
    optimizer = Adam([live, frozen])
    assert list(optimizer.params) == ["live.w"]


def test_adam_minimises_quadratic():
    params = ParameterSet("toy")
    params.register("x", np.zeros(2))
    optimizer = Adam([params])
    target = Tensor(np.array([3.0, -1.0]))
    for _ in range(500):
        with Graph() as graph:
            diff = ops.sub(params["x"], target)
            loss = ops.reduce_sum(ops.mul(diff, diff))
        optimizer.step(backward(graph, loss), lr=0.1)
    np.testing.assert_allclose(params["x"].data, [3.0, -1.0], atol=0.1)
    assert optimizer.state.step == 500
