# supernet/trainer/records.py

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from supernet.network import ModelParams
from supernet.optimizers import ConstantSchedule, CyclicSchedule, LrSchedule, OptimizerSpec, steps_per_epoch
from supernet.tensor import Matrix

METRICS_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr", "cpu_seconds"]


class TrainConfig(BaseModel):
    """
    One training session: optimizer, learning-rate schedule, batching,
    early stopping and which layers may change.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec, description="Optimizer and its hyperparameters")
    schedule: Optional[LrSchedule] = Field(None, description="Learning-rate schedule; constant base_lr when unset")
    batch_size: int = Field(128, ge=1, description="Mini-batch size")
    max_epochs: int = Field(10, ge=1, description="Upper bound on epochs")
    patience: int = Field(0, ge=0, description="Epochs without val_loss improvement before stopping; 0 disables")
    min_delta: float = Field(1e-6, ge=0.0, description="Improvement of the best val_loss that resets patience")
    trainable_mask: Optional[List[bool]] = Field(None, description="Per-layer trainable flags; all layers when unset")
    seed: int = Field(0, ge=0, lt=2**64, description="Seed of shuffling and dropout")
    shuffle_each_epoch: bool = Field(True, description="Reshuffle the training set every epoch")
    capture_epochs: List[int] = Field(default_factory=list, description="Epochs whose parameters are kept")

    def resolved_schedule(self, n_examples: int) -> Union[ConstantSchedule, CyclicSchedule]:
        if self.schedule is None:
            return ConstantSchedule(lr=self.optimizer.base_lr)
        if isinstance(self.schedule, CyclicSchedule):
            return self.schedule.resolved(steps_per_epoch(n_examples, self.batch_size))
        return self.schedule


class MetricsRecord(BaseModel):
    epoch: int = Field(..., ge=1)
    train_loss: float
    train_acc: float = Field(..., ge=0.0, le=1.0)
    val_loss: float
    val_acc: float = Field(..., ge=0.0, le=1.0)
    lr: float
    elapsed_cpu_seconds: float = Field(..., ge=0.0, description="Process CPU time since the session started")


@dataclass
class EvalReport:
    loss: float
    accuracy: float
    per_example_losses: npt.NDArray[np.float64]
    predictions: npt.NDArray[np.int64]
    probabilities: Matrix


@dataclass
class TrainResult:
    params: ModelParams
    history: List[MetricsRecord] = field(default_factory=list)
    best_epoch: int = 0
    captures: Dict[int, ModelParams] = field(default_factory=dict)


def metrics_frame(history: List[MetricsRecord]) -> pd.DataFrame:
    rows = [
        [r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.lr, r.elapsed_cpu_seconds] for r in history
    ]
    return pd.DataFrame(rows, columns=METRICS_COLUMNS)


def write_metrics_csv(history: List[MetricsRecord], path: Union[str, Path]) -> None:
    """One row per epoch under the header epoch,train_loss,train_acc,val_loss,val_acc,lr,cpu_seconds."""
    metrics_frame(history).to_csv(path, index=False, lineterminator="\n")
