# supernet/datasets/__init__.py

"""
Module: datasets

Data ingestion and preparation: IDX binaries (Fashion-MNIST distribution
format), numeric CSV files, synthetic Gaussian blobs and deterministic
train/validation/test splits.

Functions:
- load_idx(images_path, labels_path) -> Dataset
- load_csv(path, label_column, num_classes) -> Dataset
- write_csv(dataset, path) -> None
- synth_blobs(n, d, classes, separation, seed) -> Dataset
- split(dataset, spec) -> (train, val, test)
"""

from supernet.datasets.core import Dataset
from supernet.datasets.idx import IMAGE_MAGIC, LABEL_MAGIC, load_idx
from supernet.datasets.tabular import load_csv, write_csv
from supernet.datasets.splits import SplitSpec, split, synth_blobs

__all__ = [
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "Dataset",
    "SplitSpec",
    "load_csv",
    "load_idx",
    "split",
    "synth_blobs",
    "write_csv",
]
