# supernet/datasets/core.py

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from supernet.errors import ConfigurationError, DataError, ShapeError
from supernet.network import check_labels
from supernet.tensor import Matrix, as_matrix


@dataclass
class Dataset:
    """
    Labelled examples: an (N x D) feature matrix and N class indices.

    Zero-example datasets exist only as the empty parts of a split; training
    and evaluation reject them.
    """

    features: Matrix
    labels: npt.NDArray[np.int64]
    num_classes: int
    name: str = "dataset"

    def __post_init__(self):
        if self.num_classes < 1:
            raise ConfigurationError(f"{self.name}: num_classes must be positive, got {self.num_classes}")
        try:
            self.features = as_matrix(self.features, f"{self.name} features")
        except ShapeError as exc:
            raise DataError(exc.message) from exc
        if not np.all(np.isfinite(self.features)):
            raise DataError(f"{self.name}: features contain NaN or Inf")
        self.labels = check_labels(self.labels, self.features.shape[0], self.num_classes)

    def __len__(self) -> int:
        return self.features.shape[0]

    def __repr__(self) -> str:
        return f"Dataset(name={self.name!r}, n={len(self)}, dim={self.input_dim}, classes={self.num_classes})"

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices, name: str = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.num_classes, name or self.name)

    def take(self, n: int) -> "Dataset":
        """The first ``n`` examples (all of them when n exceeds the size)."""
        return self.subset(np.arange(min(n, len(self))), self.name)

    def require_nonempty(self, what: str) -> "Dataset":
        if len(self) == 0:
            raise DataError(f"{what}: dataset {self.name!r} is empty")
        return self
