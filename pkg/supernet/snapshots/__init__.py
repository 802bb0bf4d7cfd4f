# supernet/snapshots/__init__.py

"""
Module: snapshots

Snapshot harvesting: continue training a pre-trained model under a cyclic
learning rate and keep a copy of the parameters at the end of every cycle,
where the learning rate sits at lr_min.

Functions:
- harvest(params, spec, train_set, val_set, config) -> list of Snapshot
"""

import logging
from dataclasses import dataclass
from typing import List

from pydantic import BaseModel, ConfigDict, Field

from supernet.datasets import Dataset
from supernet.errors import ConfigurationError, NumericError
from supernet.network import ModelParams, NetworkSpec
from supernet.optimizers import ConstantSchedule, CyclicSchedule, LrSchedule
from supernet.trainer import EvalReport, TrainConfig, TrainingSession, check_compatible, evaluate

logger = logging.getLogger(__name__)


class SnapshotConfig(BaseModel):
    """Continued training that yields ``n_cycles`` snapshots."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    train: TrainConfig = Field(default_factory=TrainConfig, description="Optimizer, batching and seed of the session")
    warmup_epochs: int = Field(0, ge=0, description="Epochs at the constant base_lr before the first cycle")
    n_cycles: int = Field(..., ge=1, description="Number of cycles, one snapshot each")
    cycle: LrSchedule = Field(..., description="Schedule of every cycle; must be cyclic")


@dataclass
class Snapshot:
    """Parameters taken at the end of cycle ``cycle`` (1-based)."""

    params: ModelParams
    report: EvalReport
    cycle: int
    lr: float


def harvest(
    params: ModelParams,
    spec: NetworkSpec,
    train_set: Dataset,
    val_set: Dataset,
    config: SnapshotConfig,
) -> List[Snapshot]:
    """
    Run one continuous session: ``warmup_epochs`` at the optimizer's base_lr,
    then exactly ``n_cycles`` cycles. The optimizer accumulators carry over
    from warmup and between cycles. At the last step of each cycle the
    parameters are deep-copied and evaluated on ``val_set``.

    Parameters:
    - params (ModelParams): Starting point, usually a converged model.
    - config (SnapshotConfig): Cycle schedule, cycle count, warmup and the
      training settings of the session.

    Returns:
    - list of Snapshot: One per cycle in cycle order, each with its
      validation report and the learning rate of its last step.

    Raises:
    - ConfigurationError: if the schedule is not cyclic.
    - NumericError: if training diverges; the message names the cycle.

    Example:
    >>> snaps = harvest(params, spec, train, val, SnapshotConfig(n_cycles=3, cycle=cyclic))
    >>> [s.cycle for s in snaps]
    [1, 2, 3]
    """
    if not isinstance(config.cycle, CyclicSchedule):
        raise ConfigurationError(f"snapshot harvesting needs a cyclic schedule, got {config.cycle.kind!r}")
    train_set.require_nonempty("harvest")
    val_set.require_nonempty("harvest validation")
    check_compatible(spec, train_set)
    check_compatible(spec, val_set)

    session = TrainingSession(params, spec, train_set, config.train)
    warmup = ConstantSchedule(lr=config.train.optimizer.base_lr)
    for epoch in range(1, config.warmup_epochs + 1):
        stats = session.run_epoch(warmup)
        logger.info(f"warmup epoch {epoch}/{config.warmup_epochs} loss={stats.loss:.4f} acc={stats.accuracy:.4f}")

    schedule = config.cycle.resolved(session.steps_per_epoch)
    length = schedule.cycle_len_steps
    offset = session.step_count
    snapshots: List[Snapshot] = []

    def take_snapshot(live: TrainingSession) -> bool:
        position = live.step_count - 1 - offset
        if position % length != length - 1:
            return False
        cycle = position // length + 1
        report = evaluate(live.params, spec, val_set)
        snapshots.append(Snapshot(params=live.params.copy(), report=report, cycle=cycle, lr=live.last_lr))
        logger.info(f"snapshot {cycle}/{config.n_cycles} val_loss={report.loss:.4f} val_acc={report.accuracy:.4f}")
        return len(snapshots) == config.n_cycles

    while len(snapshots) < config.n_cycles:
        try:
            session.run_epoch(schedule, step_offset=offset, on_step=take_snapshot)
        except NumericError as exc:
            raise NumericError(f"cycle {len(snapshots) + 1}: {exc.message}") from exc
    return snapshots


__all__ = ["Snapshot", "SnapshotConfig", "harvest"]
