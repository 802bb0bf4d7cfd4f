# supernet/ensemble/report.py

"""
Side-by-side comparison of a SuperNet against its members and the voting
baselines, and the ensemble-size sweep.

Functions:
- compare(model, dataset) -> ComparisonReport
- ensemble_size_sweep(branches, train_set, val_set, eval_set, config, ...) -> pandas.DataFrame
- supernet_parameter_count(model) -> int
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from supernet.datasets import Dataset
from supernet.ensemble.supernet import (
    FinalLayerInit,
    SuperNetModel,
    SuperNetSpec,
    branch_outputs,
    build_supernet,
    evaluate_supernet,
    retrain_supernet,
)
from supernet.ensemble.voting import majority_vote, softmax_vote
from supernet.errors import ConfigurationError
from supernet.network import ModelParams, NetworkSpec
from supernet.tensor import Rng
from supernet.trainer import LAST_LAYER_EPOCHS, EvalReport, TrainConfig, report_from_probabilities

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["model", "accuracy", "loss"]
SWEEP_COLUMNS = ["k", "best_branch_acc", "supernet_acc", "majority_vote_acc", "softmax_vote_acc"]


@dataclass
class ComparisonReport:
    """Accuracies (and losses where defined) of every member, the SuperNet and both votes on one dataset."""

    branches: List[EvalReport]
    supernet: EvalReport
    majority_vote_acc: float
    softmax_vote_acc: float

    @property
    def best_branch_acc(self) -> float:
        return max(report.accuracy for report in self.branches)

    def frame(self) -> pd.DataFrame:
        rows = [[f"branch_{i}", r.accuracy, r.loss] for i, r in enumerate(self.branches)]
        rows.append(["supernet", self.supernet.accuracy, self.supernet.loss])
        rows.append(["majority_vote", self.majority_vote_acc, np.nan])
        rows.append(["softmax_vote", self.softmax_vote_acc, np.nan])
        return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)

    def to_csv(self, path: Union[str, Path]) -> None:
        self.frame().to_csv(path, index=False, lineterminator="\n")


def compare(model: SuperNetModel, dataset: Dataset) -> ComparisonReport:
    """
    Evaluate members, SuperNet and votes from a single eval-mode pass of
    every branch, so all columns see the same branch outputs.
    """
    outputs = branch_outputs(model, dataset)
    members = [report_from_probabilities(probs, dataset.labels) for probs in outputs.probabilities]
    majority = majority_vote([report.predictions for report in members])
    soft = softmax_vote(outputs.probabilities)
    report = ComparisonReport(
        branches=members,
        supernet=evaluate_supernet(model, dataset, outputs),
        majority_vote_acc=float(np.mean(majority == dataset.labels)),
        softmax_vote_acc=float(np.mean(soft == dataset.labels)),
    )
    logger.info(
        f"{dataset.name}: best branch {report.best_branch_acc:.4f}, supernet {report.supernet.accuracy:.4f}, "
        f"majority {report.majority_vote_acc:.4f}, softmax {report.softmax_vote_acc:.4f}"
    )
    return report


def ensemble_size_sweep(
    branches: Sequence[Tuple[NetworkSpec, ModelParams]],
    train_set: Dataset,
    val_set: Dataset,
    eval_set: Dataset,
    config: TrainConfig,
    sizes: Optional[Sequence[int]] = None,
    init: Optional[FinalLayerInit] = None,
    epochs: int = LAST_LAYER_EPOCHS,
) -> pd.DataFrame:
    """
    Build and retrain a SuperNet over the first K members for every K in
    ``sizes`` (default 1..len(branches)) and compare it with both votes on
    ``eval_set``. One row per K under SWEEP_COLUMNS.

    Copy-scaled initialization with d = K is used unless ``init`` is given.
    """
    sizes = list(sizes) if sizes is not None else list(range(1, len(branches) + 1))
    rows = []
    for k in sizes:
        if not 1 <= k <= len(branches):
            raise ConfigurationError(f"ensemble size {k} is outside 1..{len(branches)}")
        k_init = init or FinalLayerInit(mode="copy_scaled", divisor=float(k))
        model = build_supernet(SuperNetSpec(list(branches[:k]), k_init), Rng(config.seed))
        model, _ = retrain_supernet(model, train_set, val_set, config, epochs=epochs)
        report = compare(model, eval_set)
        rows.append(
            [k, report.best_branch_acc, report.supernet.accuracy, report.majority_vote_acc, report.softmax_vote_acc]
        )
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def supernet_parameter_count(model: SuperNetModel) -> int:
    """Σ branch hidden parameters + (Σ penultimate widths)·C + C."""
    return model.parameter_count()
