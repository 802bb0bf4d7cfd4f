# supernet/ensemble/voting.py

"""
Voting baselines over the members of an ensemble.

Functions:
- majority_vote(predictions) -> class-index array
- softmax_vote(probabilities) -> class-index array
"""

from typing import Sequence

import numpy as np
import numpy.typing as npt

from supernet.errors import ConfigurationError, DataError, ShapeError
from supernet.tensor import Matrix


def majority_vote(predictions: Sequence[npt.ArrayLike]) -> npt.NDArray[np.int64]:
    """
    Most frequent predicted class per example; ties go to the lowest class index.

    Raises:
    - ConfigurationError: if there are no voters.
    - DataError: if the voters predicted different numbers of examples.

    Example:
    >>> majority_vote([[3], [1]]).tolist()
    [1]
    """
    if len(predictions) == 0:
        raise ConfigurationError("majority vote needs at least one voter")
    votes = [np.asarray(p, dtype=np.int64) for p in predictions]
    lengths = {len(v) for v in votes}
    if len(lengths) > 1:
        raise DataError(f"voters predicted different numbers of examples: {sorted(lengths)}")
    stacked = np.vstack(votes)
    if stacked.size == 0:
        return np.zeros(0, dtype=np.int64)
    if stacked.min() < 0:
        raise DataError("predictions must be non-negative class indices")
    num_classes = int(stacked.max()) + 1
    counts = np.zeros((stacked.shape[1], num_classes), dtype=np.int64)
    for row in stacked:
        counts[np.arange(stacked.shape[1]), row] += 1
    return np.argmax(counts, axis=1).astype(np.int64)


def softmax_vote(probabilities: Sequence[Matrix]) -> npt.NDArray[np.int64]:
    """
    Argmax of the elementwise sum of member probability matrices, summed in
    member order; ties go to the lowest class index.

    Raises:
    - ConfigurationError: if there are no voters.
    - ShapeError: if the matrices differ in shape.
    """
    if len(probabilities) == 0:
        raise ConfigurationError("softmax vote needs at least one voter")
    shape = np.shape(probabilities[0])
    total = np.zeros(shape, dtype=np.float64)
    for index, probs in enumerate(probabilities):
        if np.shape(probs) != shape:
            raise ShapeError(f"voter {index} has probabilities of shape {np.shape(probs)}, voter 0 has {shape}")
        total = total + probs
    return np.argmax(total, axis=1).astype(np.int64)
