# supernet/datasets/tabular.py

import logging
import re
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from supernet.datasets.core import Dataset
from supernet.errors import ConfigurationError, FormatError

logger = logging.getLogger(__name__)

_LINE_RE = re.compile(r"line (\d+)")


def _label_name(frame: pd.DataFrame, label_column: Union[int, str]) -> str:
    if isinstance(label_column, int):
        try:
            return frame.columns[label_column]
        except IndexError:
            raise ConfigurationError(f"label column {label_column} is out of range for {len(frame.columns)} columns")
    if label_column not in frame.columns:
        raise ConfigurationError(f"label column {label_column!r} not found in header {list(frame.columns)}")
    return label_column


def load_csv(path, label_column: Union[int, str], num_classes: int, name: str = None) -> Dataset:
    """
    Load a rectangular numeric CSV file with a header row.

    ``label_column`` (a header name or a column index, negative indices
    allowed) holds integer class labels; every other column is a feature,
    kept in header order.

    Raises:
    - FormatError: bytes that are not UTF-8, ragged rows, non-numeric or
      missing cells, non-integer labels, or labels outside [0, num_classes);
      the 1-based data row is given where known.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        match = _LINE_RE.search(str(exc))
        row = int(match.group(1)) - 1 if match else None
        raise FormatError(f"{path}: ragged row", row=row) from exc
    except pd.errors.EmptyDataError as exc:
        raise FormatError(f"{path}: no header row") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text: {exc.reason}") from exc

    label_name = _label_name(frame, label_column)
    numeric = frame.apply(pd.to_numeric, errors="coerce").astype(np.float64)
    bad = ~np.isfinite(numeric.to_numpy())
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise FormatError(f"{path}: non-numeric or missing value in column {frame.columns[col]!r}", row=int(row) + 1)

    labels = numeric[label_name].to_numpy()
    bad_labels = np.flatnonzero((labels != np.floor(labels)) | (labels < 0) | (labels >= num_classes))
    if bad_labels.size:
        row = int(bad_labels[0])
        raise FormatError(f"{path}: label {labels[row]} is not a class index below {num_classes}", row=row + 1)

    features = numeric.drop(columns=[label_name]).to_numpy(dtype=np.float64)
    dataset = Dataset(features, labels.astype(np.int64), num_classes, name or Path(path).stem)
    logger.info(f"Loaded {dataset} from {path}")
    return dataset


def write_csv(dataset: Dataset, path, label_column: str = "label") -> None:
    """Write features (columns f0, f1, ...) followed by the label column."""
    frame = pd.DataFrame(dataset.features, columns=[f"f{i}" for i in range(dataset.input_dim)])
    frame[label_column] = dataset.labels
    frame.to_csv(path, index=False)
