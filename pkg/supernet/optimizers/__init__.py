# supernet/optimizers/__init__.py

"""
Module: optimizers

The five optimizers used for training (sgd with momentum, adagrad, rmsprop,
adam, nadam) and constant / cyclic learning-rate schedules.

Functions:
- init_state(spec, params) -> OptimizerState
- step(spec, state, params, grads, lr, trainable_mask=None) -> (ModelParams, OptimizerState)
- lr_at(schedule, step) -> float
- cycle_steps(epochs, n_examples, batch_size) -> int
"""

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from supernet.errors import NumericError, ShapeError
from supernet.network import ModelParams, resolve_mask
from supernet.optimizers.rules import RULES
from supernet.optimizers.schedules import (
    ConstantSchedule,
    CyclicSchedule,
    LrSchedule,
    cycle_steps,
    cycle_steps_for,
    lr_at,
    steps_per_epoch,
)


OptimizerKind = Literal["sgd", "adagrad", "rmsprop", "adam", "nadam"]


class OptimizerSpec(BaseModel):
    """Optimizer choice and hyperparameters; defaults are the usual framework defaults."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: OptimizerKind = Field("adam", description="Update rule")
    base_lr: float = Field(0.001, gt=0.0, description="Learning rate of constant schedules and warmups")
    momentum: float = Field(0.0, ge=0.0, description="sgd momentum")
    rho: float = Field(0.9, ge=0.0, lt=1.0, description="rmsprop decay")
    beta1: float = Field(0.9, ge=0.0, lt=1.0, description="adam/nadam first-moment decay")
    beta2: float = Field(0.999, ge=0.0, lt=1.0, description="adam/nadam second-moment decay")
    epsilon: float = Field(1e-8, gt=0.0, description="Denominator guard")


@dataclass
class OptimizerState:
    """
    Accumulators of one training session.

    ``slots[i]`` belongs to the i-th parameter tensor in the order
    W_0, b_0, W_1, b_1, ...; ``t`` counts the steps taken.
    """

    kind: str
    slots: List[Dict[str, np.ndarray]] = field(default_factory=list)
    t: int = 0


def init_state(spec: OptimizerSpec, params: ModelParams) -> OptimizerState:
    """Empty accumulators for every tensor of ``params``, step counter at 0."""
    return OptimizerState(kind=spec.kind, slots=[{} for _ in range(2 * params.num_layers)])


def step(
    spec: OptimizerSpec,
    state: OptimizerState,
    params: ModelParams,
    grads: ModelParams,
    lr: float,
    trainable_mask: Optional[Sequence[bool]] = None,
) -> Tuple[ModelParams, OptimizerState]:
    """
    Apply one update to every trainable layer.

    Frozen layers keep their tensors (the same array objects) and their
    accumulators; ``state.t`` advances on every call.

    Parameters:
    - spec (OptimizerSpec): Update rule and hyperparameters.
    - state (OptimizerState): Accumulators from ``init_state``; updated in place.
    - params (ModelParams): Current parameters; never modified.
    - grads (ModelParams): Gradients with the shapes of ``params``.
    - lr (float): Learning rate of this step.
    - trainable_mask (list of bool, optional): Layers to update; all when None.

    Returns:
    - (ModelParams, OptimizerState): New parameters and the advanced state.

    Raises:
    - ShapeError: if gradients, parameters or state disagree in shape.
    - NumericError: if a trainable layer's gradient contains NaN or Inf.

    On either error ``params`` and ``state`` (``t`` included) are unchanged.
    """
    if state.kind != spec.kind:
        raise ShapeError(f"optimizer state belongs to {state.kind!r}, spec is {spec.kind!r}")
    if len(state.slots) != 2 * params.num_layers:
        raise ShapeError(f"optimizer state tracks {len(state.slots)} tensors, params have {2 * params.num_layers}")
    if grads.num_layers != params.num_layers:
        raise ShapeError(f"{grads.num_layers} gradient layers for {params.num_layers} parameter layers")
    mask = resolve_mask(trainable_mask, params.num_layers)

    trainable = [layer for layer, flag in enumerate(mask) if flag]
    # nothing is updated until every trainable gradient has passed
    for layer in trainable:
        for tensor, gradient in ((params.weights[layer], grads.weights[layer]), (params.biases[layer], grads.biases[layer])):
            if gradient.shape != tensor.shape:
                raise ShapeError(f"layer {layer}: gradient shape {gradient.shape} != parameter shape {tensor.shape}")
            if not np.all(np.isfinite(gradient)):
                raise NumericError(f"non-finite gradient in layer {layer}")

    state.t += 1
    rule = RULES[spec.kind]
    weights = list(params.weights)
    biases = list(params.biases)
    for layer in trainable:
        for offset, (tensors, gradient) in enumerate(((weights, grads.weights[layer]), (biases, grads.biases[layer]))):
            tensors[layer] = rule(spec, tensors[layer], gradient, state.slots[2 * layer + offset], lr, state.t)
    return ModelParams(weights, biases), state


__all__ = [
    "ConstantSchedule",
    "CyclicSchedule",
    "LrSchedule",
    "OptimizerKind",
    "OptimizerSpec",
    "OptimizerState",
    "cycle_steps",
    "cycle_steps_for",
    "init_state",
    "lr_at",
    "step",
    "steps_per_epoch",
]
