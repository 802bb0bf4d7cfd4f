# supernet/optimizers/schedules.py

import math
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from supernet.errors import ConfigurationError


class ConstantSchedule(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant"] = "constant"
    lr: float = Field(..., gt=0.0, description="Learning rate used at every step")


class CyclicSchedule(BaseModel):
    """
    Learning rate falling from lr_max to lr_min within every cycle, then
    jumping back to lr_max.

    The cycle length is given in optimizer steps, or in epochs and converted
    with ``resolved`` once the number of steps per epoch is known.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["cyclic"] = "cyclic"
    lr_max: float = Field(..., gt=0.0, description="Learning rate at the start of each cycle")
    lr_min: float = Field(..., gt=0.0, description="Learning rate at the end of each cycle")
    cycle_len_steps: Optional[int] = Field(None, ge=2, description="Cycle length in optimizer steps")
    cycle_len_epochs: Optional[int] = Field(None, ge=1, description="Cycle length in epochs")
    shape: Literal["linear", "cosine"] = Field("cosine", description="Decay shape within a cycle")

    @model_validator(mode="after")
    def check_cycle(self) -> "CyclicSchedule":
        if self.lr_max < self.lr_min:
            raise ValueError(f"lr_max ({self.lr_max}) must not be below lr_min ({self.lr_min})")
        if self.cycle_len_steps is None and self.cycle_len_epochs is None:
            raise ValueError("set cycle_len_steps or cycle_len_epochs")
        return self

    def resolved(self, steps_per_epoch: int) -> "CyclicSchedule":
        if self.cycle_len_steps is not None:
            return self
        return self.model_copy(update={"cycle_len_steps": cycle_steps_for(self.cycle_len_epochs, steps_per_epoch)})


LrSchedule = Annotated[Union[ConstantSchedule, CyclicSchedule], Field(discriminator="kind")]


def steps_per_epoch(n_examples: int, batch_size: int) -> int:
    # the last incomplete batch counts as a step
    return max(1, math.ceil(n_examples / batch_size))


def cycle_steps_for(epochs: int, steps_in_epoch: int) -> int:
    steps = epochs * steps_in_epoch
    if steps < 2:
        raise ConfigurationError(f"a cycle of {epochs} epoch(s) at {steps_in_epoch} step(s) per epoch is shorter than 2 steps")
    return steps


def cycle_steps(epochs: int, n_examples: int, batch_size: int) -> int:
    """
    Convert a cycle length in epochs to optimizer steps.

    Example:
    >>> cycle_steps(4, 1000, 128)
    32
    """
    return cycle_steps_for(epochs, steps_per_epoch(n_examples, batch_size))


def lr_at(schedule: Union[ConstantSchedule, CyclicSchedule], step: int) -> float:
    """
    Learning rate at optimizer step ``step`` (0-based).

    Cyclic schedules use the phase p = (step mod L) / (L - 1):
    linear gives lr_max - p (lr_max - lr_min) and cosine gives
    lr_min + (lr_max - lr_min)(1 + cos(pi p)) / 2. The first step of a cycle
    is exactly lr_max and the last exactly lr_min.
    """
    if step < 0:
        raise ConfigurationError(f"step must be non-negative, got {step}")
    if isinstance(schedule, ConstantSchedule):
        return schedule.lr
    length = schedule.cycle_len_steps
    if length is None:
        raise ConfigurationError("cyclic schedule has no step length; call resolved() first")
    position = step % length
    if position == 0:
        return schedule.lr_max
    if position == length - 1:
        return schedule.lr_min
    phase = position / (length - 1)
    span = schedule.lr_max - schedule.lr_min
    if schedule.shape == "linear":
        return schedule.lr_max - phase * span
    return schedule.lr_min + 0.5 * span * (1.0 + math.cos(math.pi * phase))
