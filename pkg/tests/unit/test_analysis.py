# tests/unit/test_analysis.py

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from supernet.analysis import (
    LOSS_STATS_COLUMNS,
    LossStats,
    SimilarityMatrix,
    export_penultimate_features,
    loss_stats,
    mean_offdiagonal,
    similarity_matrix,
    write_loss_stats_csv,
    write_per_example_losses_csv,
    write_similarity_csv,
)
from supernet.errors import DataError
from supernet.network import forward
from supernet.tensor import Rng


def sorted_percentile(values, q):
    ordered = sorted(values)
    rank = q * (len(ordered) - 1)
    low = int(np.floor(rank))
    high = min(low + 1, len(ordered) - 1)
    return ordered[low] + (rank - low) * (ordered[high] - ordered[low])


# ---------------------------------------------
# Similarity
# ---------------------------------------------

@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([0, 0, 1], [0, 1, 1], 2 / 3),
        ([0, 1, 0, 1], [1, 0, 1, 0], 0.0),
        ([2, 2, 2], [2, 2, 2], 1.0),
    ],
    ids=["two_of_three", "complementary", "identical"],
)
def test_similarity_pair(a, b, expected):
    """Agreement of two prediction vectors is the fraction of equal entries."""
    assert similarity_matrix([a, b]).entries[0, 1] == pytest.approx(expected)


def test_similarity_properties():
    """Symmetric, unit diagonal, bounded to [0, 1], and independent of example order."""
    rng = Rng(10)
    predictions = [rng.permutation(40) % 3 for _ in range(4)]
    sim = similarity_matrix(predictions)
    assert sim.k == 4
    assert np.array_equal(sim.entries, sim.entries.T)
    assert np.all(np.diag(sim.entries) == 1.0)
    assert np.all((sim.entries >= 0.0) & (sim.entries <= 1.0))

    order = rng.permutation(40)
    shuffled = similarity_matrix([p[order] for p in predictions])
    assert np.array_equal(shuffled.entries, sim.entries), "example order must not matter"


def test_similarity_overlap_bound():
    """Two models right on fractions a_i and a_j of the examples agree on at least a_i + a_j - 1 of them."""
    rng = Rng(11)
    labels = rng.permutation(60) % 4
    predictions = []
    for _ in range(3):
        noisy = labels.copy()
        flip = rng.random((60,)) < 0.3
        noisy[flip] = (noisy[flip] + 1) % 4
        predictions.append(noisy)
    sim = similarity_matrix(predictions)
    accuracy = [np.mean(p == labels) for p in predictions]
    for i in range(3):
        for j in range(3):
            assert sim.entries[i, j] >= accuracy[i] + accuracy[j] - 1 - 1e-12


@pytest.mark.parametrize(
    "predictions",
    [[[0, 1]], [[0, 1], [0]], [[], []]],
    ids=["one_model", "length_mismatch", "no_examples"],
)
def test_similarity_errors(predictions):
    with pytest.raises(DataError):
        similarity_matrix(predictions)


def test_mean_offdiagonal():
    """Averages the entries above the diagonal; one model has no pairs to average."""
    assert mean_offdiagonal(SimilarityMatrix(np.ones((3, 3)))) == 1.0
    assert mean_offdiagonal(SimilarityMatrix(np.array([[1.0, 0.8], [0.8, 1.0]]))) == pytest.approx(0.8)
    hand = np.array([[1.0, 0.5, 0.7], [0.5, 1.0, 0.9], [0.7, 0.9, 1.0]])
    assert mean_offdiagonal(SimilarityMatrix(hand)) == pytest.approx((0.5 + 0.7 + 0.9) / 3)
    with pytest.raises(DataError):
        mean_offdiagonal(SimilarityMatrix(np.ones((1, 1))))


# ---------------------------------------------
# Loss statistics
# ---------------------------------------------

def test_loss_stats_one_to_hundred():
    """Percentiles of 1..100 interpolate linearly between the closest ranks."""
    stats = loss_stats(np.arange(1, 101))
    assert stats.mean == pytest.approx(50.5)
    assert stats.p90 == pytest.approx(90.1, abs=1e-9)
    assert stats.p95 == pytest.approx(95.05, abs=1e-9)


def test_loss_stats_constant():
    stats = loss_stats([0.25] * 17)
    assert stats.mean == pytest.approx(0.25)
    assert stats.std == pytest.approx(0.0, abs=1e-15)
    assert stats.p90 == pytest.approx(0.25) and stats.p95 == pytest.approx(0.25)


def test_loss_stats_matches_sorting_oracle():
    """Compare with a mean, population std and percentiles computed by sorting a plain list."""
    values = (Rng(12).random((257,)) * 5).tolist()
    stats = loss_stats(values)
    mean = sum(values) / len(values)
    std = (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5
    assert stats.mean == pytest.approx(mean, abs=1e-12)
    assert stats.std == pytest.approx(std, abs=1e-12)
    assert stats.p90 == pytest.approx(sorted_percentile(values, 0.90), abs=1e-12)
    assert stats.p95 == pytest.approx(sorted_percentile(values, 0.95), abs=1e-12)
    assert stats.p90 <= stats.p95


@pytest.mark.parametrize("values", [[], [1.0, np.inf]], ids=["empty", "non_finite"])
def test_loss_stats_errors(values):
    with pytest.raises(DataError):
        loss_stats(values)


def test_loss_stats_model_rejects_inverted_percentiles():
    with pytest.raises(ValidationError):
        LossStats(mean=1.0, std=0.0, p90=2.0, p95=1.0)


# ---------------------------------------------
# Exports
# ---------------------------------------------

def test_export_penultimate_features(tmp_path, blob_splits, small_spec, small_params):
    """One row per test example: the eval-mode penultimate activations, then the label."""
    _, _, test_set = blob_splits
    path = tmp_path / "features.csv"
    export_penultimate_features(small_params, small_spec, test_set, path)
    frame = pd.read_csv(path)
    assert len(frame) == len(test_set)
    assert list(frame.columns) == [f"f{i}" for i in range(8)] + ["label"]
    expected = forward(small_params, small_spec, test_set.features, "eval").penultimate()
    assert np.allclose(frame.iloc[:, :-1].to_numpy(), expected, rtol=0, atol=1e-12)
    assert frame["label"].tolist() == test_set.labels.tolist()


def test_write_similarity_csv(tmp_path):
    """No header; full float precision."""
    path = tmp_path / "similarity.csv"
    write_similarity_csv(similarity_matrix([[0, 0, 1], [0, 1, 1]]), path)
    rows = [[float(v) for v in line.split(",")] for line in path.read_text().splitlines()]
    assert len(rows) == 2 and rows[0][0] == 1.0
    assert rows[0][1] == pytest.approx(2 / 3, abs=1e-15)


def test_write_loss_stats_and_per_example_csv(tmp_path):
    stats_path = tmp_path / "loss_stats.csv"
    write_loss_stats_csv({"model": loss_stats([1.0, 2.0, 3.0])}, stats_path)
    frame = pd.read_csv(stats_path)
    assert list(frame.columns) == LOSS_STATS_COLUMNS
    assert frame["mean"].iloc[0] == pytest.approx(2.0)

    losses_path = tmp_path / "per_example_losses.csv"
    write_per_example_losses_csv({"a": [0.1, 0.2], "b": [0.3, 0.4]}, [1, 0], losses_path)
    losses = pd.read_csv(losses_path)
    assert list(losses.columns) == ["a", "b", "label"]
    assert losses["label"].tolist() == [1, 0]
