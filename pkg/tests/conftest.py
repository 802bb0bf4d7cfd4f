# tests/conftest.py

import pytest

from supernet.datasets import SplitSpec, split, synth_blobs
from supernet.network import NetworkSpec, init_params
from supernet.optimizers import OptimizerSpec
from supernet.settings import get_settings
from supernet.tensor import Rng
from supernet.trainer import TrainConfig


@pytest.fixture(autouse=True)
def exact_settings(monkeypatch):
    """
    Every test runs with the default process settings (exact matmul, no
    thread cap) regardless of the developer's environment or .env file.
    """
    for name in ("SNET_THREADS", "SNET_MATMUL", "SNET_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("SNET_MATMUL", "exact")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def blobs():
    """Three well separated 4-D classes, 240 examples."""
    return synth_blobs(240, 4, 3, separation=6.0, seed=7)


@pytest.fixture
def blob_splits(blobs):
    return split(blobs, SplitSpec(fractions=(0.7, 0.15, 0.15), seed=3, stratified=True))


@pytest.fixture
def small_spec():
    return NetworkSpec.mlp(4, [12, 8, 3])


@pytest.fixture
def small_params(small_spec):
    return init_params(small_spec, Rng(11))


@pytest.fixture
def fast_config():
    return TrainConfig(optimizer=OptimizerSpec(kind="adam", base_lr=0.01), batch_size=32, max_epochs=5, seed=5)


EXPERIMENT_TABLES = {
    "data": """
[data]
kind = "synth"
n = 180
d = 4
classes = 3
separation = 6.0
seed = 2

[data.split]
fractions = [0.6, 0.2, 0.2]
seed = 1
stratified = true
""",
    "network": """
[network]
input_dim = 4
widths = [12, 8, 3]
""",
    "train": """
[train]
batch_size = 16
max_epochs = 3
seed = 4

[train.optimizer]
kind = "adam"
base_lr = 0.01
""",
    "partition": """
[partition]
k = 2
""",
    "supernet": """
[supernet]
epochs = 2
size_sweep = true

[supernet.init]
mode = "copy_scaled"
divisor = 2.0
""",
    "snapshot": """
[snapshot]
n_cycles = 2

[snapshot.cycle]
kind = "cyclic"
lr_max = 0.05
lr_min = 0.001
cycle_len_epochs = 1
""",
    "retrain": """
[retrain]
epochs = 1
depth = 2
epochs_per_layer = 1
""",
    "regimes": """
[regimes]
k = 2
epochs = 3
tail_epochs = 1
""",
}


@pytest.fixture
def write_experiment(tmp_path):
    """
    Write a small synthetic-data experiment file. Keyword arguments replace
    (or, with None, drop) a table of EXPERIMENT_TABLES.
    """

    def write(name="experiment.toml", **tables):
        merged = {**EXPERIMENT_TABLES, **tables}
        run_dir = (tmp_path / name).with_suffix("")
        body = f'output_dir = "{run_dir.as_posix()}"\n' + "".join(t for t in merged.values() if t)
        path = tmp_path / name
        path.write_text(body)
        return path

    return write
