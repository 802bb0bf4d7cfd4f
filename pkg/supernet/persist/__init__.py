# supernet/persist/__init__.py

"""
Module: persist

Model checkpoints, TOML experiment configuration and self-describing run
directories.
"""

from supernet.persist.checkpoint import (
    MAGIC,
    load_checkpoint,
    load_model,
    load_supernet,
    save_model,
    save_supernet,
)
from supernet.persist.config import ExperimentConfig, load_config, load_data
from supernet.persist.rundir import RunManifest, prepare_run_dir, sha256_of

__all__ = [
    "MAGIC",
    "ExperimentConfig",
    "RunManifest",
    "load_checkpoint",
    "load_config",
    "load_data",
    "load_model",
    "load_supernet",
    "prepare_run_dir",
    "save_model",
    "save_supernet",
    "sha256_of",
]
