# supernet/datasets/splits.py

import logging
import math
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from supernet.datasets.core import Dataset
from supernet.errors import ConfigurationError, DataError
from supernet.tensor import Rng

logger = logging.getLogger(__name__)


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fractions: Tuple[float, float, float] = Field((0.8, 0.1, 0.1), description="train, validation and test fractions")
    seed: int = Field(0, ge=0, lt=2**64, description="Shuffle seed")
    stratified: bool = Field(False, description="Keep per-class proportions in every split")

    @field_validator("fractions")
    def validate_fractions(cls, value):
        if any(f < 0 for f in value):
            raise ValueError(f"fractions must be non-negative, got {value}")
        if abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(value)}")
        return value


def _allocate(n: int, fractions) -> List[int]:
    """Largest-remainder allocation of n items; ties go to the earlier split."""
    exact = [f * n for f in fractions]
    counts = [math.floor(x) for x in exact]
    order = sorted((i for i, f in enumerate(fractions) if f > 0), key=lambda i: (counts[i] - exact[i], i))
    leftover = n - sum(counts)
    for k in range(leftover):
        counts[order[k % len(order)]] += 1
    return counts


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Shuffle with ``spec.seed`` and cut into disjoint train/validation/test
    parts covering the whole dataset.

    With ``stratified`` each class is allocated separately, so every split
    holds its fraction of each class to within one example.

    Raises:
    - DataError: a split with a positive fraction would be empty.
    """
    n = len(dataset)
    order = Rng(spec.seed).permutation(n)
    if spec.stratified:
        parts: List[List[np.ndarray]] = [[], [], []]
        for label in range(dataset.num_classes):
            members = order[dataset.labels[order] == label]
            start = 0
            for part, count in zip(parts, _allocate(len(members), spec.fractions)):
                part.append(members[start : start + count])
                start += count
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        chunks = []
        for part in parts:
            indices = np.concatenate(part) if part else np.empty(0, dtype=np.int64)
            chunks.append(indices[np.argsort(rank[indices], kind="stable")])
    else:
        counts = _allocate(n, spec.fractions)
        bounds = np.cumsum([0] + counts)
        chunks = [order[bounds[i] : bounds[i + 1]] for i in range(3)]

    names = ("train", "val", "test")
    for name, fraction, chunk in zip(names, spec.fractions, chunks):
        if fraction > 0 and chunk.size == 0:
            raise DataError(f"{name} split of {dataset.name!r} is empty: {n} examples are too few for fraction {fraction}")
    train, val, test = (dataset.subset(chunk, f"{dataset.name}/{name}") for name, chunk in zip(names, chunks))
    logger.info(f"Split {dataset.name}: train={len(train)} val={len(val)} test={len(test)}")
    return train, val, test


def synth_blobs(n: int, d: int, classes: int, separation: float, seed: int = 0, name: str = "blobs") -> Dataset:
    """
    Unit-variance Gaussian blobs with balanced classes.

    When d >= classes the class means sit on scaled coordinate axes so every
    pair of means is ``separation`` apart; otherwise they are spaced
    ``separation`` apart along the first axis.
    """
    if classes < 2:
        raise ConfigurationError(f"synth_blobs needs at least 2 classes, got {classes}")
    if separation <= 0:
        raise ConfigurationError(f"separation must be positive, got {separation}")
    if d < 1:
        raise ConfigurationError(f"dimension must be positive, got {d}")
    if n < classes:
        raise DataError(f"{n} examples cannot cover {classes} classes")

    rng = Rng(seed)
    labels = (np.arange(n) % classes)[rng.permutation(n)]
    means = np.zeros((classes, d))
    if d >= classes:
        means[np.arange(classes), np.arange(classes)] = separation / math.sqrt(2.0)
    else:
        means[:, 0] = separation * np.arange(classes)
    features = means[labels] + rng.normal((n, d))
    return Dataset(features, labels, classes, name)
