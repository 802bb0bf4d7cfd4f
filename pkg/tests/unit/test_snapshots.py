# tests/unit/test_snapshots.py

import numpy as np
import pytest

from supernet.errors import ConfigurationError
from supernet.optimizers import ConstantSchedule, CyclicSchedule, OptimizerSpec
from supernet.snapshots import SnapshotConfig, harvest
from supernet.trainer import TrainConfig


@pytest.fixture
def sgd_train():
    return TrainConfig(optimizer=OptimizerSpec(kind="sgd", base_lr=0.01, momentum=0.9), batch_size=32, seed=2)


def cyclic(**kwargs):
    return CyclicSchedule(lr_max=0.05, lr_min=0.001, **kwargs)


@pytest.mark.parametrize("n_cycles", [1, 3], ids=["one_cycle", "three_cycles"])
def test_harvest_returns_one_snapshot_per_cycle(blob_splits, small_spec, small_params, sgd_train, n_cycles):
    """Snapshots are numbered from 1 and taken at the last step of each cycle."""
    train_set, val_set, _ = blob_splits
    config = SnapshotConfig(train=sgd_train, n_cycles=n_cycles, cycle=cyclic(cycle_len_epochs=1))
    snapshots = harvest(small_params, small_spec, train_set, val_set, config)
    assert [s.cycle for s in snapshots] == list(range(1, n_cycles + 1))
    assert all(s.lr == 0.001 for s in snapshots), "snapshots are taken where the learning rate is lr_min"


def test_cycles_need_not_align_with_epochs(blob_splits, small_spec, small_params, sgd_train):
    """A cycle length in steps may cross epoch boundaries, with a warmup epoch first."""
    train_set, val_set, _ = blob_splits
    config = SnapshotConfig(train=sgd_train, warmup_epochs=1, n_cycles=4, cycle=cyclic(cycle_len_steps=4, shape="linear"))
    snapshots = harvest(small_params, small_spec, train_set, val_set, config)
    assert len(snapshots) == 4
    assert all(s.lr == 0.001 for s in snapshots)
    assert all(len(s.report.per_example_losses) == len(val_set) for s in snapshots)


def test_snapshots_are_independent_copies(blob_splits, small_spec, small_params, sgd_train):
    """Changing one snapshot's arrays leaves the others alone."""
    train_set, val_set, _ = blob_splits
    config = SnapshotConfig(train=sgd_train, n_cycles=2, cycle=cyclic(cycle_len_epochs=1))
    first, second = harvest(small_params, small_spec, train_set, val_set, config)
    before = second.params.copy()
    first.params.weights[0][0, 0] += 10.0
    assert second.params.equals(before)
    assert not first.params.equals(second.params)


def test_harvest_is_deterministic(blob_splits, small_spec, small_params, sgd_train):
    train_set, val_set, _ = blob_splits
    config = SnapshotConfig(train=sgd_train, warmup_epochs=1, n_cycles=2, cycle=cyclic(cycle_len_epochs=1))
    runs = [harvest(small_params, small_spec, train_set, val_set, config) for _ in range(2)]
    for a, b in zip(*runs):
        assert a.params.equals(b.params)
        assert np.array_equal(a.report.per_example_losses, b.report.per_example_losses)


def test_harvest_rejects_constant_schedule(blob_splits, small_spec, small_params, sgd_train):
    """Without a cyclic schedule there are no cycle ends to snapshot."""
    train_set, val_set, _ = blob_splits
    config = SnapshotConfig(train=sgd_train, n_cycles=1, cycle=ConstantSchedule(lr=0.1))
    with pytest.raises(ConfigurationError):
        harvest(small_params, small_spec, train_set, val_set, config)
