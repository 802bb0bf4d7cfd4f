# supernet/trainer/__init__.py

"""
Module: trainer

Epoch/mini-batch training with early stopping and layer freezing, last-layer
retraining, the descending layer-by-layer schedule, and evaluation with
per-example losses.
"""

from supernet.trainer.parallel import run_sessions, worker_count
from supernet.trainer.procedures import (
    LAST_LAYER_EPOCHS,
    STAGE_EPOCHS,
    DescendingResult,
    descending_layer_training,
    retrain_last_layer,
    train,
)
from supernet.trainer.records import (
    METRICS_COLUMNS,
    EvalReport,
    MetricsRecord,
    TrainConfig,
    TrainResult,
    metrics_frame,
    write_metrics_csv,
)
from supernet.trainer.session import TrainingSession, check_compatible, evaluate, report_from_probabilities

__all__ = [
    "LAST_LAYER_EPOCHS",
    "METRICS_COLUMNS",
    "STAGE_EPOCHS",
    "DescendingResult",
    "EvalReport",
    "MetricsRecord",
    "TrainConfig",
    "TrainResult",
    "TrainingSession",
    "check_compatible",
    "descending_layer_training",
    "evaluate",
    "metrics_frame",
    "report_from_probabilities",
    "retrain_last_layer",
    "run_sessions",
    "train",
    "worker_count",
    "write_metrics_csv",
]
