# supernet/ensemble/supernet.py

"""
SuperNet: sub-models merged through one new softmax layer.

The merged layer reads the concatenated penultimate activations of every
branch. It starts either from random weights or from the branches' own
softmax heads stacked vertically (optionally divided by a factor d), with
the bias set to the mean of the branch head biases. Only the merged layer is
ever retrained; branches stay frozen and run in eval mode.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from supernet.datasets import Dataset
from supernet.errors import ConfigurationError, ShapeError
from supernet.network import LayerSpec, ModelParams, NetworkSpec, forward
from supernet.tensor import Matrix, Rng, glorot_init
from supernet.trainer import (
    LAST_LAYER_EPOCHS,
    EvalReport,
    TrainConfig,
    TrainResult,
    check_compatible,
    report_from_probabilities,
    train,
)
from supernet.trainer.session import EVAL_CHUNK

logger = logging.getLogger(__name__)

InitMode = Literal["random", "copy", "copy_scaled"]


class FinalLayerInit(BaseModel):
    """How the merged softmax layer starts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: InitMode = Field("copy", description="random, copy, or copy_scaled")
    divisor: float = Field(1.0, gt=0.0, description="d: copied weights are divided by it in copy_scaled mode")
    scale_bias: bool = Field(False, description="copy_scaled also divides the averaged bias by d")


@dataclass
class SuperNetSpec:
    """Trained sub-models to merge and the initialization of the merged layer."""

    branches: List[Tuple[NetworkSpec, ModelParams]]
    init: FinalLayerInit = dataclasses.field(default_factory=FinalLayerInit)

    def __post_init__(self):
        if not self.branches:
            raise ShapeError("a SuperNet needs at least one branch")
        first, _ = self.branches[0]
        for index, (spec, params) in enumerate(self.branches):
            params.check_against(spec)
            if spec.input_dim != first.input_dim or spec.num_classes != first.num_classes:
                raise ShapeError(
                    f"branch {index} maps {spec.input_dim} -> {spec.num_classes}, "
                    f"branch 0 maps {first.input_dim} -> {first.num_classes}"
                )

    @property
    def num_classes(self) -> int:
        return self.branches[0][0].num_classes


@dataclass
class SuperNetModel:
    """
    Frozen branches plus the merged softmax layer.

    ``branches`` keep their original softmax heads: the merged model never
    uses them, the voting baselines and per-branch reports do.
    """

    branches: List[Tuple[NetworkSpec, ModelParams]]
    head_weight: Matrix
    head_bias: np.ndarray
    head_layer: LayerSpec = dataclasses.field(default_factory=lambda: LayerSpec(width=1, activation="softmax"))

    def __post_init__(self):
        if self.head_weight.shape != (self.merged_width, self.num_classes):
            raise ShapeError(
                f"merged weight has shape {self.head_weight.shape}, expected {(self.merged_width, self.num_classes)}"
            )
        if self.head_layer.width != self.num_classes:
            self.head_layer = self.head_layer.model_copy(update={"width": self.num_classes})

    @property
    def input_dim(self) -> int:
        return self.branches[0][0].input_dim

    @property
    def num_classes(self) -> int:
        return self.branches[0][0].num_classes

    @property
    def merged_width(self) -> int:
        return sum(spec.penultimate_width for spec, _ in self.branches)

    def head_spec(self) -> NetworkSpec:
        return NetworkSpec(input_dim=self.merged_width, layers=[self.head_layer])

    def head_params(self) -> ModelParams:
        return ModelParams([self.head_weight], [self.head_bias])

    def parameter_count(self) -> int:
        """Branch hidden parameters plus the merged layer; branch heads are not part of the SuperNet."""
        hidden = sum(spec.parameter_count(include_head=False) for spec, _ in self.branches)
        return hidden + self.head_weight.size + self.head_bias.size


@dataclass
class BranchOutputs:
    """One eval-mode pass of every branch over a dataset."""

    features: List[Matrix]
    probabilities: List[Matrix]
    labels: np.ndarray

    def merged(self) -> Matrix:
        return np.hstack(self.features)


def build_supernet(spec: SuperNetSpec, rng: Rng) -> SuperNetModel:
    """
    Merge the branches of ``spec``.

    Copy modes stack each branch's softmax-head weight in branch order and
    average the head biases; copy_scaled then divides the weights (and the
    bias when ``scale_bias``) by ``divisor``. Random mode draws the merged
    weight with glorot_init and starts from a zero bias.
    """
    branches = [(branch_spec, params.copy()) for branch_spec, params in spec.branches]
    merged_width = sum(branch_spec.penultimate_width for branch_spec, _ in branches)
    init = spec.init
    if init.mode == "random":
        weight = glorot_init(rng, merged_width, spec.num_classes)
        bias = np.zeros(spec.num_classes)
    else:
        weight = np.vstack([params.weights[-1] for _, params in branches])
        bias = np.mean(np.vstack([params.biases[-1] for _, params in branches]), axis=0)
        if init.mode == "copy_scaled":
            weight = weight / init.divisor
            if init.scale_bias:
                bias = bias / init.divisor
    logger.info(f"Built SuperNet from {len(branches)} branches ({init.mode}, merged width {merged_width})")
    return SuperNetModel(branches=branches, head_weight=weight, head_bias=bias)


def branch_outputs(model: SuperNetModel, dataset: Dataset) -> BranchOutputs:
    """Penultimate activations and head probabilities of every branch, computed once."""
    dataset.require_nonempty("branch outputs")
    features, probabilities = [], []
    for spec, params in model.branches:
        check_compatible(spec, dataset)
        caches = [
            forward(params, spec, dataset.features[start : start + EVAL_CHUNK], "eval")
            for start in range(0, len(dataset), EVAL_CHUNK)
        ]
        features.append(np.vstack([cache.penultimate() for cache in caches]))
        probabilities.append(np.vstack([cache.probs for cache in caches]))
    return BranchOutputs(features=features, probabilities=probabilities, labels=dataset.labels)


def merged_dataset(model: SuperNetModel, dataset: Dataset, outputs: Optional[BranchOutputs] = None) -> Dataset:
    outputs = outputs or branch_outputs(model, dataset)
    return Dataset(outputs.merged(), dataset.labels, model.num_classes, f"{dataset.name}/merged")


def supernet_probabilities(model: SuperNetModel, outputs: BranchOutputs) -> Matrix:
    return forward(model.head_params(), model.head_spec(), outputs.merged(), "eval").probs


def evaluate_supernet(model: SuperNetModel, dataset: Dataset, outputs: Optional[BranchOutputs] = None) -> EvalReport:
    outputs = outputs or branch_outputs(model, dataset)
    return report_from_probabilities(supernet_probabilities(model, outputs), dataset.labels)


def retrain_supernet(
    model: SuperNetModel,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
    epochs: int = LAST_LAYER_EPOCHS,
    l2_coeff: Optional[float] = None,
    l2_bias: Optional[bool] = None,
) -> Tuple[SuperNetModel, TrainResult]:
    """
    Train only the merged softmax layer, with a fresh optimizer, on the
    branches' frozen penultimate features.

    ``l2_coeff``/``l2_bias`` set the L2 penalty of the merged weights and
    bias. Branch parameters are never touched; ``epochs=0`` returns the model
    unchanged.

    Returns:
    - (SuperNetModel, TrainResult): The model with the retrained head, and
      the head's training history.
    """
    if epochs < 0:
        raise ConfigurationError(f"epochs must be non-negative, got {epochs}")
    head_layer = model.head_layer
    update = {key: value for key, value in (("l2_coeff", l2_coeff), ("l2_bias", l2_bias)) if value is not None}
    if update:
        head_layer = LayerSpec.model_validate({**head_layer.model_dump(), **update})
    model = dataclasses.replace(model, head_layer=head_layer)
    if epochs == 0:
        return model, TrainResult(params=model.head_params())

    train_features = merged_dataset(model, train_set)
    val_features = merged_dataset(model, val_set)
    session_config = config.model_copy(update={"max_epochs": epochs, "trainable_mask": None})
    logger.info(f"Retraining the SuperNet layer for {epochs} epochs (l2={head_layer.l2_coeff}, bias={head_layer.l2_bias})")
    result = train(model.head_params(), model.head_spec(), train_features, val_features, session_config)
    retrained = dataclasses.replace(model, head_weight=result.params.weights[0], head_bias=result.params.biases[0])
    return retrained, result
