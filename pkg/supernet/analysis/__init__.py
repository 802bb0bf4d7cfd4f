# supernet/analysis/__init__.py

"""
Module: analysis

Diversity and overconfidence diagnostics for trained models.

Functions:
- similarity_matrix(predictions) -> SimilarityMatrix
- mean_offdiagonal(sim) -> float
- loss_stats(per_example_losses) -> LossStats
- export_penultimate_features(params, spec, dataset, path) -> None
- write_similarity_csv(sim, path) -> None
- write_loss_stats_csv(rows, path) -> None
- write_per_example_losses_csv(losses, labels, path) -> None
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Sequence, Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from supernet.datasets import Dataset
from supernet.errors import DataError
from supernet.network import ModelParams, NetworkSpec, forward
from supernet.tensor import Matrix
from supernet.trainer import check_compatible
from supernet.trainer.session import EVAL_CHUNK

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
LOSS_STATS_COLUMNS = ["model", "mean", "std", "p90", "p95"]


@dataclass
class SimilarityMatrix:
    """Fraction of examples on which two models predict the same class, for every pair."""

    entries: Matrix

    def __post_init__(self):
        k = self.entries.shape[0]
        if self.entries.shape != (k, k):
            raise DataError(f"similarity matrix must be square, got {self.entries.shape}")

    @property
    def k(self) -> int:
        return self.entries.shape[0]


class LossStats(BaseModel):
    mean: float
    std: float = Field(..., ge=0.0, description="Population standard deviation")
    p90: float
    p95: float

    @model_validator(mode="after")
    def check_order(self) -> "LossStats":
        if self.p90 > self.p95:
            raise ValueError(f"p90 ({self.p90}) exceeds p95 ({self.p95})")
        return self


def similarity_matrix(predictions: Sequence[npt.ArrayLike]) -> SimilarityMatrix:
    """
    Entry (i, j) is the fraction of examples where models i and j agree.

    Raises:
    - DataError: with fewer than two models, or predictions of different lengths.

    Example:
    >>> float(similarity_matrix([[0, 0, 1], [0, 1, 1]]).entries[0, 1])
    0.6666666666666666
    """
    if len(predictions) < 2:
        raise DataError(f"similarity needs at least 2 models, got {len(predictions)}")
    stacked = [np.asarray(p, dtype=np.int64) for p in predictions]
    lengths = {p.size for p in stacked}
    if len(lengths) > 1:
        raise DataError(f"models predicted different numbers of examples: {sorted(lengths)}")
    n = lengths.pop()
    if n == 0:
        raise DataError("similarity needs at least one example")
    k = len(stacked)
    entries = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            entries[i, j] = entries[j, i] = np.count_nonzero(stacked[i] == stacked[j]) / n
    return SimilarityMatrix(entries)


def mean_offdiagonal(sim: SimilarityMatrix) -> float:
    """Average agreement over the pairs i != j; a single lower number means more diverse models."""
    if sim.k < 2:
        raise DataError(f"mean off-diagonal similarity needs k >= 2, got {sim.k}")
    mask = ~np.eye(sim.k, dtype=bool)
    return float(sim.entries[mask].mean())


def loss_stats(per_example_losses: npt.ArrayLike) -> LossStats:
    """
    Mean, population standard deviation and the 90th/95th percentiles,
    interpolated linearly between the closest ranks (rank 1 + q(n - 1)).

    Example:
    >>> loss_stats(range(1, 101)).p90
    90.1
    """
    losses = np.asarray(per_example_losses, dtype=np.float64).ravel()
    if losses.size == 0:
        raise DataError("loss statistics of an empty array")
    if not np.all(np.isfinite(losses)):
        raise DataError("per-example losses contain NaN or Inf")
    p90, p95 = np.percentile(losses, [90, 95], method="linear")
    return LossStats(mean=float(losses.mean()), std=float(losses.std()), p90=float(p90), p95=float(p95))


def export_penultimate_features(params: ModelParams, spec: NetworkSpec, dataset: Dataset, path: PathLike) -> None:
    """CSV with one row per example: eval-mode penultimate activations f0.. then the true label."""
    check_compatible(spec, dataset)
    chunks = [
        forward(params, spec, dataset.features[start : start + EVAL_CHUNK], "eval").penultimate()
        for start in range(0, len(dataset), EVAL_CHUNK)
    ]
    features = np.vstack(chunks) if chunks else np.zeros((0, spec.penultimate_width))
    frame = pd.DataFrame(features, columns=[f"f{i}" for i in range(features.shape[1])])
    frame["label"] = dataset.labels
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    logger.info(f"Wrote {len(frame)} penultimate feature rows to {path}")


def write_similarity_csv(sim: SimilarityMatrix, path: PathLike) -> None:
    """k rows of k comma-separated values, no header."""
    pd.DataFrame(sim.entries).to_csv(path, index=False, header=False, lineterminator="\n", float_format="%.17g")


def write_loss_stats_csv(rows: Mapping[str, LossStats], path: PathLike) -> None:
    frame = pd.DataFrame(
        [[name, s.mean, s.std, s.p90, s.p95] for name, s in rows.items()], columns=LOSS_STATS_COLUMNS
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def write_per_example_losses_csv(losses: Dict[str, npt.ArrayLike], labels: npt.ArrayLike, path: PathLike) -> None:
    """One column per model plus the label column, one row per example."""
    frame = pd.DataFrame({name: np.asarray(values, dtype=np.float64) for name, values in losses.items()})
    frame["label"] = np.asarray(labels, dtype=np.int64)
    frame.to_csv(path, index=False, lineterminator="\n")


__all__ = [
    "LOSS_STATS_COLUMNS",
    "LossStats",
    "SimilarityMatrix",
    "export_penultimate_features",
    "loss_stats",
    "mean_offdiagonal",
    "similarity_matrix",
    "write_loss_stats_csv",
    "write_per_example_losses_csv",
    "write_similarity_csv",
]
