# tests/unit/test_optimizers.py

import math

import numpy as np
import pytest
from pydantic import ValidationError

from supernet.errors import ConfigurationError, NumericError, ShapeError
from supernet.network import ModelParams
from supernet.optimizers import (
    ConstantSchedule,
    CyclicSchedule,
    OptimizerSpec,
    cycle_steps,
    init_state,
    lr_at,
    step,
)


def scalar_params(value):
    return ModelParams([np.array([[value]])], [np.array([value])])


# ---------------------------------------------
# Single update rules, hand-computed
# ---------------------------------------------

@pytest.mark.parametrize(
    "spec, expected",
    [
        (OptimizerSpec(kind="sgd"), 0.95),
        (OptimizerSpec(kind="sgd", momentum=0.9), 0.95),
        (OptimizerSpec(kind="adagrad"), 0.9),
        (OptimizerSpec(kind="rmsprop", rho=0.9), 1.0 - 0.1 * 0.5 / math.sqrt(0.025)),
        (OptimizerSpec(kind="adam"), 0.9),
        (OptimizerSpec(kind="nadam"), 1.0 - 0.1 * (0.9 * 0.05 / 0.19 + 0.5) / 0.5),
    ],
    ids=["sgd", "sgd_momentum", "adagrad", "rmsprop", "adam", "nadam"],
)
def test_first_step(spec, expected):
    """One step from w = b = 1 with g = 0.5 and lr 0.1, checked against hand-computed values."""
    params = scalar_params(1.0)
    grads = scalar_params(0.5)
    updated, state = step(spec, init_state(spec, params), params, grads, lr=0.1)
    assert updated.weights[0][0, 0] == pytest.approx(expected, rel=1e-6)
    assert updated.biases[0][0] == pytest.approx(expected, rel=1e-6)
    assert state.t == 1


@pytest.mark.parametrize(
    "spec, start, gradient, expected",
    [
        (OptimizerSpec(kind="sgd"), 1.0, 2.0, 0.8),
        (OptimizerSpec(kind="adam"), 0.0, 1.0, -0.1 / (1.0 + 1e-8)),
        (OptimizerSpec(kind="adagrad"), 0.0, 3.0, -0.1 * 3.0 / (3.0 + 1e-8)),
    ],
    ids=["sgd_plain", "adam_bias_corrected", "adagrad_fresh_state"],
)
def test_worked_examples(spec, start, gradient, expected):
    """
    First steps at lr 0.1: sgd w - lr g; adam's bias correction makes
    m_hat = v_hat = g^2 = 1; adagrad divides by sqrt(g^2) = 3.
    """
    params = scalar_params(start)
    updated, _ = step(spec, init_state(spec, params), params, scalar_params(gradient), lr=0.1)
    assert updated.weights[0][0, 0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind", ["sgd", "adagrad", "rmsprop", "adam", "nadam"])
def test_zero_gradient_changes_nothing_but_the_step_count(kind):
    """Zero gradients leave the parameters exactly in place but still count as steps."""
    spec = OptimizerSpec(kind=kind, momentum=0.9 if kind == "sgd" else 0.0)
    params = scalar_params(0.7)
    state = init_state(spec, params)
    for _ in range(3):
        params, state = step(spec, state, params, scalar_params(0.0), lr=0.1)
    assert params.weights[0][0, 0] == 0.7 and params.biases[0][0] == 0.7
    assert state.t == 3


@pytest.mark.parametrize(
    "spec",
    [
        OptimizerSpec(kind="sgd"),
        OptimizerSpec(kind="sgd", momentum=0.5),
        OptimizerSpec(kind="adagrad"),
        OptimizerSpec(kind="rmsprop"),
        OptimizerSpec(kind="adam"),
        OptimizerSpec(kind="nadam"),
    ],
    ids=["sgd", "sgd_momentum", "adagrad", "rmsprop", "adam", "nadam"],
)
def test_quadratic_loss_decreases_monotonically(spec):
    """Minimizing (w^2 + b^2) / 2 from w = b = 1 with lr 0.01: the loss falls at each of 60 steps."""
    params = scalar_params(1.0)
    state = init_state(spec, params)
    losses = []
    for _ in range(60):
        w, b = params.weights[0][0, 0], params.biases[0][0]
        losses.append(0.5 * (w * w + b * b))
        params, state = step(spec, state, params, params.copy(), lr=0.01)
    assert all(later < earlier for earlier, later in zip(losses, losses[1:])), f"loss went up: {losses}"


def test_sgd_momentum_second_step():
    """v1 = -0.05, v2 = 0.9 v1 - 0.05 = -0.095, so w = 1 - 0.05 - 0.095."""
    spec = OptimizerSpec(kind="sgd", momentum=0.9)
    params = scalar_params(1.0)
    grads = scalar_params(0.5)
    state = init_state(spec, params)
    params, state = step(spec, state, params, grads, lr=0.1)
    params, state = step(spec, state, params, grads, lr=0.1)
    assert params.weights[0][0, 0] == pytest.approx(0.855)


def test_step_does_not_mutate_inputs():
    spec = OptimizerSpec(kind="adam")
    params = scalar_params(1.0)
    step(spec, init_state(spec, params), params, scalar_params(0.5), lr=0.1)
    assert params.weights[0][0, 0] == 1.0


def test_frozen_layers_keep_their_arrays():
    """Frozen layers are returned as the same array objects and never get accumulators."""
    spec = OptimizerSpec(kind="adam")
    params = ModelParams([np.ones((2, 2)), np.ones((2, 2))], [np.ones(2), np.ones(2)])
    grads = ModelParams([np.ones((2, 2)), np.ones((2, 2))], [np.ones(2), np.ones(2)])
    state = init_state(spec, params)
    updated, state = step(spec, state, params, grads, lr=0.1, trainable_mask=[False, True])
    assert updated.weights[0] is params.weights[0]
    assert state.slots[0] == {} and state.slots[1] == {}, "frozen layers must not create accumulators"
    assert not np.array_equal(updated.weights[1], params.weights[1])


def test_non_finite_gradient():
    """The error names the layer with the bad gradient."""
    spec = OptimizerSpec(kind="sgd")
    params = scalar_params(1.0)
    with pytest.raises(NumericError, match="layer 0"):
        step(spec, init_state(spec, params), params, scalar_params(np.nan), lr=0.1)


def test_non_finite_gradient_leaves_state_untouched():
    """A NaN in the second layer must not half-apply the update to the first."""
    spec = OptimizerSpec(kind="adam")
    params = ModelParams([np.ones((2, 2)), np.ones((2, 2))], [np.ones(2), np.ones(2)])
    grads = ModelParams([np.ones((2, 2)), np.full((2, 2), np.inf)], [np.ones(2), np.ones(2)])
    state = init_state(spec, params)
    with pytest.raises(NumericError, match="layer 1"):
        step(spec, state, params, grads, lr=0.1)
    assert state.t == 0
    assert all(slots == {} for slots in state.slots), "no accumulator may be created by a failed step"
    assert np.array_equal(params.weights[0], np.ones((2, 2)))


def test_state_from_another_optimizer():
    params = scalar_params(1.0)
    with pytest.raises(ShapeError):
        step(OptimizerSpec(kind="sgd"), init_state(OptimizerSpec(kind="adam"), params), params, params, lr=0.1)


# ---------------------------------------------
# Learning-rate schedules
# ---------------------------------------------

def test_constant_schedule():
    assert lr_at(ConstantSchedule(lr=0.3), 1234) == 0.3


@pytest.mark.parametrize(
    "shape, step_index, expected",
    [
        ("linear", 0, 0.1),
        ("linear", 2, 0.055),
        ("linear", 4, 0.01),
        ("linear", 5, 0.1),
        ("cosine", 0, 0.1),
        ("cosine", 1, 0.01 + 0.045 * (1 + math.cos(math.pi / 4))),
        ("cosine", 2, 0.055),
        ("cosine", 4, 0.01),
        ("cosine", 9, 0.01),
    ],
    ids=[
        "linear_start",
        "linear_middle",
        "linear_end",
        "linear_next_cycle",
        "cosine_start",
        "cosine_quarter",
        "cosine_middle",
        "cosine_end",
        "cosine_second_cycle_end",
    ],
)
def test_cyclic_schedule(shape, step_index, expected):
    """Within a 5-step cycle from 0.1 down to 0.01, both shapes hit lr_max at the start and lr_min at the end."""
    schedule = CyclicSchedule(lr_max=0.1, lr_min=0.01, cycle_len_steps=5, shape=shape)
    assert lr_at(schedule, step_index) == pytest.approx(expected, abs=1e-15)


def test_cyclic_endpoints_are_exact():
    """Cycle boundaries give lr_max and lr_min exactly, without rounding error."""
    schedule = CyclicSchedule(lr_max=0.05, lr_min=0.001, cycle_len_steps=7)
    assert all(lr_at(schedule, 7 * c) == 0.05 for c in range(4))
    assert all(lr_at(schedule, 7 * c + 6) == 0.001 for c in range(4))


def test_cyclic_schedule_in_epochs():
    schedule = CyclicSchedule(lr_max=0.1, lr_min=0.01, cycle_len_epochs=2)
    with pytest.raises(ConfigurationError):
        lr_at(schedule, 0)
    assert schedule.resolved(8).cycle_len_steps == 16


def test_cycle_steps():
    assert cycle_steps(4, 1000, 128) == 32


def test_cycle_shorter_than_two_steps():
    with pytest.raises(ConfigurationError):
        cycle_steps(1, 10, 128)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lr_max": 0.01, "lr_min": 0.1, "cycle_len_steps": 5},
        {"lr_max": 0.1, "lr_min": 0.01},
        {"lr_max": 0.1, "lr_min": 0.01, "cycle_len_steps": 1},
    ],
    ids=["max_below_min", "no_length", "length_one"],
)
def test_cyclic_schedule_validation(kwargs):
    with pytest.raises(ValidationError):
        CyclicSchedule(**kwargs)


def test_negative_step():
    with pytest.raises(ConfigurationError):
        lr_at(ConstantSchedule(lr=0.1), -1)
