# supernet/trainer/procedures.py

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from supernet.datasets import Dataset
from supernet.errors import ConfigurationError, NumericError
from supernet.network import ModelParams, NetworkSpec
from supernet.tensor import Rng, glorot_init
from supernet.trainer.records import MetricsRecord, TrainConfig, TrainResult
from supernet.trainer.session import TrainingSession, check_compatible, evaluate

logger = logging.getLogger(__name__)

# Default epochs of a last-layer retrain and of each descending stage
LAST_LAYER_EPOCHS = 10
STAGE_EPOCHS = 3


def train(
    params: ModelParams,
    spec: NetworkSpec,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
) -> TrainResult:
    """
    Mini-batch training with per-epoch validation and early stopping.

    After every epoch a MetricsRecord is appended. An epoch improves when its
    val_loss beats the best so far by more than ``config.min_delta``; ties
    count toward patience. With ``patience > 0`` training stops after
    ``patience`` epochs without improvement and the best-val-loss parameters
    are returned. Layers masked out in ``trainable_mask`` never change.

    Parameters:
    - params (ModelParams): Starting parameters; never modified.
    - spec (NetworkSpec): Architecture the parameters belong to.
    - train_set (Dataset): Examples the optimizer sees.
    - val_set (Dataset): Examples scored after every epoch.
    - config (TrainConfig): Optimizer, schedule, batch size, seed and stopping rule.

    Returns:
    - TrainResult: Final (or restored best) parameters, one MetricsRecord per
      epoch and the parameters captured at ``config.capture_epochs``.

    Raises:
    - DataError: if either dataset is empty.
    - NumericError: if a loss becomes NaN/Inf; the message names the epoch.
    """
    train_set.require_nonempty("train")
    val_set.require_nonempty("validation")
    check_compatible(spec, train_set)
    check_compatible(spec, val_set)

    session = TrainingSession(params, spec, train_set, config)
    schedule = config.resolved_schedule(len(train_set))
    result = TrainResult(params=params)
    best_loss = math.inf
    best_params = params
    waited = 0
    cpu_start = time.process_time()
    for epoch in range(1, config.max_epochs + 1):
        try:
            stats = session.run_epoch(schedule)
            report = evaluate(session.params, spec, val_set)
        except NumericError as exc:
            raise NumericError(f"epoch {epoch}: {exc.message}") from exc
        if not (math.isfinite(stats.loss) and math.isfinite(report.loss)):
            raise NumericError(f"epoch {epoch}: non-finite loss (train {stats.loss}, val {report.loss})")

        record = MetricsRecord(
            epoch=epoch,
            train_loss=stats.loss,
            train_acc=stats.accuracy,
            val_loss=report.loss,
            val_acc=report.accuracy,
            lr=stats.lr,
            elapsed_cpu_seconds=time.process_time() - cpu_start,
        )
        result.history.append(record)
        logger.info(
            f"epoch {epoch}/{config.max_epochs} loss={record.train_loss:.4f} acc={record.train_acc:.4f} "
            f"val_loss={record.val_loss:.4f} val_acc={record.val_acc:.4f} lr={record.lr:.3g}"
        )
        if epoch in config.capture_epochs:
            result.captures[epoch] = session.params.copy()

        if report.loss < best_loss - config.min_delta:
            best_loss = report.loss
            best_params = session.params
            result.best_epoch = epoch
            waited = 0
        else:
            waited += 1
        if config.patience and waited >= config.patience:
            logger.info(f"Early stop after epoch {epoch}; restoring epoch {result.best_epoch}")
            break

    result.params = best_params if config.patience else session.params
    return result


def _last_layer_spec(spec: NetworkSpec, l2_coeff: Optional[float], l2_bias: Optional[bool]) -> NetworkSpec:
    update = {}
    if l2_coeff is not None:
        update["l2_coeff"] = l2_coeff
    if l2_bias is not None:
        update["l2_bias"] = l2_bias
    if not update:
        return spec
    layers = list(spec.layers)
    layers[-1] = layers[-1].model_copy(update=update)
    return NetworkSpec(input_dim=spec.input_dim, layers=layers)


def retrain_last_layer(
    params: ModelParams,
    spec: NetworkSpec,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
    epochs: int = LAST_LAYER_EPOCHS,
    reinit: bool = False,
    l2_coeff: Optional[float] = None,
    l2_bias: Optional[bool] = None,
) -> TrainResult:
    """
    Freeze every layer except the softmax layer and train it alone with a
    fresh optimizer for ``epochs`` epochs.

    ``reinit`` replaces the last layer with a Glorot-initialized one (zero
    bias) before training; ``l2_coeff``/``l2_bias`` override the last layer's
    regularization for this retrain only. ``epochs=0`` returns the input.

    Returns:
    - TrainResult: Whose params differ from ``params`` in the last layer only.
    """
    if epochs < 0:
        raise ConfigurationError(f"epochs must be non-negative, got {epochs}")
    if epochs == 0:
        return TrainResult(params=params)
    start = params
    if reinit:
        rng = Rng(config.seed)
        head = glorot_init(rng, spec.penultimate_width, spec.num_classes)
        start = ModelParams(params.weights[:-1] + [head], params.biases[:-1] + [np.zeros(spec.num_classes)])
    mask = [False] * (spec.num_layers - 1) + [True]
    session_config = config.model_copy(update={"trainable_mask": mask, "max_epochs": epochs})
    logger.info(f"Retraining the last layer for {epochs} epochs (reinit={reinit})")
    return train(start, _last_layer_spec(spec, l2_coeff, l2_bias), train_set, val_set, session_config)


@dataclass
class DescendingResult:
    """Result of descending_layer_training; ``history`` chains the stage histories."""

    params: ModelParams
    stages: List[TrainResult] = field(default_factory=list)

    @property
    def history(self):
        return [record for stage in self.stages for record in stage.history]


def descending_layer_training(
    params: ModelParams,
    spec: NetworkSpec,
    train_set: Dataset,
    val_set: Dataset,
    depth: int,
    config: TrainConfig,
    epochs_per_layer: Union[int, Sequence[int]] = STAGE_EPOCHS,
) -> DescendingResult:
    """
    Train single layers from the output backward: stage k (1..depth) unfreezes
    only the k-th layer from the end, trains it, and freezes it again.

    ``epochs_per_layer`` is one count for every stage or one count per stage.
    Stage k uses seed ``config.seed + k - 1`` so depth 1 matches
    ``retrain_last_layer`` with the same epochs.

    Parameters:
    - depth (int): Number of layers trained, counted from the output (0..L).
    - epochs_per_layer (int or list of int): Epochs of every stage, or of each
      stage in order.

    Returns:
    - DescendingResult: Final parameters and one TrainResult per stage that ran.

    Raises:
    - ConfigurationError: if ``depth`` exceeds the layer count or the stage
      counts do not match ``depth``.
    """
    if depth < 0 or depth > spec.num_layers:
        raise ConfigurationError(f"depth must be in [0, {spec.num_layers}], got {depth}")
    epochs = [epochs_per_layer] * depth if isinstance(epochs_per_layer, int) else list(epochs_per_layer)
    if len(epochs) != depth:
        raise ConfigurationError(f"{len(epochs)} stage epoch counts for depth {depth}")

    result = DescendingResult(params=params)
    for k, stage_epochs in enumerate(epochs, start=1):
        if stage_epochs == 0:
            continue
        layer = spec.num_layers - k
        stage_config = config.model_copy(
            update={
                "trainable_mask": [index == layer for index in range(spec.num_layers)],
                "max_epochs": stage_epochs,
                "seed": (config.seed + k - 1) % 2**64,
            }
        )
        logger.info(f"Descending stage {k}/{depth}: training layer {layer} for {stage_epochs} epochs")
        stage = train(result.params, spec, train_set, val_set, stage_config)
        result.stages.append(stage)
        result.params = stage.params
    return result
