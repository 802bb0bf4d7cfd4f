# supernet/persist/config.py

"""
Experiment configuration files.

An experiment is one TOML file validated into ``ExperimentConfig``. Tables:

    output_dir = "runs/fmnist-small"

    [data]                      # kind = "idx" | "csv" | "synth"
    kind = "idx"
    images = "data/train-images-idx3-ubyte.gz"
    labels = "data/train-labels-idx1-ubyte.gz"
    test_images = "data/t10k-images-idx3-ubyte.gz"   # optional explicit test set
    test_labels = "data/t10k-labels-idx1-ubyte.gz"
    limit = 20000                                    # optional, first N examples

    [data.split]
    fractions = [0.9, 0.1, 0.0]
    seed = 0
    stratified = true

    [network]
    input_dim = 784
    widths = [360, 840, 840, 10]
    dropout_rate = 0.3

    [train]
    batch_size = 128
    max_epochs = 40
    patience = 10
    seed = 1
    [train.optimizer]
    kind = "adam"

Optional tables: ``[partition]``, ``[supernet]`` (with ``[supernet.init]``),
``[snapshot]`` (with ``[snapshot.cycle]``), ``[retrain]``, ``[analysis]`` and
``[regimes]``. Input paths are relative to the working directory and must
exist when the file is loaded.
"""

import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import tomli
from pydantic import BaseModel, ConfigDict, Field, FilePath, ValidationError, model_validator

from supernet.datasets import Dataset, SplitSpec, load_csv, load_idx, split, synth_blobs
from supernet.ensemble import FinalLayerInit
from supernet.errors import ConfigurationError
from supernet.network import Activation, NetworkSpec
from supernet.snapshots import SnapshotConfig
from supernet.trainer import LAST_LAYER_EPOCHS, STAGE_EPOCHS, TrainConfig

logger = logging.getLogger(__name__)

Splits = Tuple[Dataset, Dataset, Dataset]


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class IdxSource(_Section):
    kind: Literal["idx"] = "idx"
    images: FilePath
    labels: FilePath
    test_images: Optional[FilePath] = None
    test_labels: Optional[FilePath] = None
    num_classes: int = Field(10, ge=2)
    limit: Optional[int] = Field(None, ge=1, description="Keep only the first N examples of each file")
    split: SplitSpec = Field(default_factory=SplitSpec)

    @model_validator(mode="after")
    def check_test_pair(self) -> "IdxSource":
        if (self.test_images is None) != (self.test_labels is None):
            raise ValueError("test_images and test_labels go together")
        return self


class CsvSource(_Section):
    kind: Literal["csv"] = "csv"
    path: FilePath
    test_path: Optional[FilePath] = None
    label_column: Union[int, str] = Field(-1, description="Header name or column index of the labels")
    num_classes: int = Field(..., ge=2)
    limit: Optional[int] = Field(None, ge=1)
    split: SplitSpec = Field(default_factory=SplitSpec)


class SynthSource(_Section):
    kind: Literal["synth"] = "synth"
    n: int = Field(..., ge=2)
    d: int = Field(..., ge=1)
    classes: int = Field(..., ge=2)
    separation: float = Field(..., gt=0.0)
    seed: int = Field(0, ge=0, lt=2**64)
    split: SplitSpec = Field(default_factory=SplitSpec)


DataSource = Annotated[Union[IdxSource, CsvSource, SynthSource], Field(discriminator="kind")]


class NetworkConfig(_Section):
    """A plain MLP; ``widths`` ends with the number of classes."""

    input_dim: int = Field(..., ge=1)
    widths: List[int] = Field(..., min_length=1)
    activation: Activation = "relu"
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0)
    l2_coeff: float = Field(0.0, ge=0.0)

    def spec(self) -> NetworkSpec:
        return NetworkSpec.mlp(self.input_dim, self.widths, self.activation, self.dropout_rate, self.l2_coeff)


class PartitionConfig(_Section):
    k: int = Field(..., ge=1)
    branch_dropout: Optional[float] = Field(None, ge=0.0, lt=1.0)


class SuperNetConfig(_Section):
    init: FinalLayerInit = Field(default_factory=FinalLayerInit)
    epochs: int = Field(LAST_LAYER_EPOCHS, ge=0, description="Retrain epochs of the merged layer")
    l2_coeff: Optional[float] = Field(None, ge=0.0)
    l2_bias: Optional[bool] = None
    branches: List[FilePath] = Field(default_factory=list, description="Branch checkpoints when none are given on the command line")
    size_sweep: bool = Field(False, description="Also report every ensemble size 1..K")


class RetrainConfig(_Section):
    epochs: int = Field(LAST_LAYER_EPOCHS, ge=0, description="Epochs of a last-layer retrain")
    depth: int = Field(3, ge=0, description="Layers trained by the descending schedule")
    epochs_per_layer: Union[int, List[int]] = Field(STAGE_EPOCHS, description="Epochs of each descending stage")
    reinit: bool = False
    l2_coeff: Optional[float] = Field(None, ge=0.0)
    l2_bias: Optional[bool] = None


class AnalysisConfig(_Section):
    split: Literal["val", "test"] = Field("test", description="Split analyzed by evaluate and analyze")
    export_features: bool = True


class RegimesConfig(_Section):
    k: int = Field(..., ge=1)
    epochs: int = Field(..., ge=2)
    tail_epochs: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_tail(self) -> "RegimesConfig":
        if self.tail_epochs >= self.epochs:
            raise ValueError(f"tail_epochs ({self.tail_epochs}) must be below epochs ({self.epochs})")
        return self


class ExperimentConfig(_Section):
    data: DataSource
    network: NetworkConfig
    train: TrainConfig = Field(default_factory=TrainConfig)
    partition: Optional[PartitionConfig] = None
    supernet: Optional[SuperNetConfig] = None
    snapshot: Optional[SnapshotConfig] = None
    retrain: RetrainConfig = Field(default_factory=RetrainConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    regimes: Optional[RegimesConfig] = None
    output_dir: Path = Path("runs/default")

    def require(self, section: str):
        value = getattr(self, section)
        if value is None:
            raise ConfigurationError(f"this command needs a [{section}] table in the config")
        return value

    def snapshot_config(self) -> SnapshotConfig:
        """The [snapshot] table, inheriting [train] unless it sets its own train table."""
        snapshot = self.require("snapshot")
        if "train" in snapshot.model_fields_set:
            return snapshot
        return snapshot.model_copy(update={"train": self.train})


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Parse and validate a TOML experiment file.

    Raises:
    - ConfigurationError: non-UTF-8 or unreadable TOML, unknown keys, invalid values or
      missing input files; the message lists every problem.
    """
    try:
        with open(path, "rb") as handle:
            raw = tomli.load(handle)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigurationError(f"{path}: not UTF-8 text: {exc.reason} at byte {exc.start}") from exc
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigurationError(f"{path}: {problems}") from exc
    logger.info(f"Loaded experiment config {path} (data={config.data.kind}, output_dir={config.output_dir})")
    return config


def load_data(config: ExperimentConfig) -> Splits:
    """
    Load the configured source and cut it into train/validation/test.

    With an explicit test file the main file is still split by the
    configured fractions, and the explicit test set replaces the test part.
    """
    source = config.data
    test = None
    if isinstance(source, IdxSource):
        full = load_idx(source.images, source.labels, source.num_classes)
        if source.test_images is not None:
            test = load_idx(source.test_images, source.test_labels, source.num_classes, name="test")
    elif isinstance(source, CsvSource):
        full = load_csv(source.path, source.label_column, source.num_classes)
        if source.test_path is not None:
            test = load_csv(source.test_path, source.label_column, source.num_classes, name="test")
    else:
        full = synth_blobs(source.n, source.d, source.classes, source.separation, source.seed)
    limit = getattr(source, "limit", None)
    if limit is not None:
        full = full.take(limit)
        test = test.take(limit) if test is not None else None
    train_set, val_set, test_set = split(full, source.split)
    if test is not None:
        test_set = test
    logger.info(f"Data: train={len(train_set)} val={len(val_set)} test={len(test_set)}")
    return train_set, val_set, test_set
