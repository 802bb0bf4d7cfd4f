# supernet/trainer/session.py

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from supernet.datasets import Dataset
from supernet.errors import ShapeError
from supernet.network import ModelParams, NetworkSpec, backward, forward, per_example_losses, resolve_mask
from supernet.optimizers import ConstantSchedule, CyclicSchedule, init_state, lr_at, step, steps_per_epoch
from supernet.tensor import Rng
from supernet.trainer.records import EvalReport, TrainConfig

logger = logging.getLogger(__name__)

EVAL_CHUNK = 4096


def check_compatible(spec: NetworkSpec, dataset: Dataset) -> None:
    if dataset.input_dim != spec.input_dim:
        raise ShapeError(f"dataset {dataset.name!r} has {dataset.input_dim} features, network expects {spec.input_dim}")
    if dataset.num_classes != spec.num_classes:
        raise ShapeError(f"dataset {dataset.name!r} has {dataset.num_classes} classes, network outputs {spec.num_classes}")


def report_from_probabilities(probabilities: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Loss, accuracy and predictions (argmax, ties to the lowest class) of a probability matrix."""
    losses = per_example_losses(probabilities, labels)
    predictions = np.argmax(probabilities, axis=1).astype(np.int64)
    return EvalReport(
        loss=float(losses.mean()),
        accuracy=float(np.mean(predictions == labels)),
        per_example_losses=losses,
        predictions=predictions,
        probabilities=probabilities,
    )


def evaluate(params: ModelParams, spec: NetworkSpec, dataset: Dataset) -> EvalReport:
    """
    Eval-mode forward pass over ``dataset``.

    Raises:
    - DataError: if the dataset is empty.
    - ShapeError: if its feature count or classes disagree with ``spec``.
    """
    dataset.require_nonempty("evaluate")
    check_compatible(spec, dataset)
    chunks = [
        forward(params, spec, dataset.features[start : start + EVAL_CHUNK], "eval").probs
        for start in range(0, len(dataset), EVAL_CHUNK)
    ]
    return report_from_probabilities(np.vstack(chunks), dataset.labels)


@dataclass
class EpochStats:
    loss: float
    accuracy: float
    lr: float
    steps: int


class TrainingSession:
    """
    Mini-batch training state of one model: parameters, optimizer
    accumulators, the global step counter and the shuffle/dropout generators.

    A session owns its state; sessions for different models run independently.
    """

    def __init__(self, params: ModelParams, spec: NetworkSpec, train_set: Dataset, config: TrainConfig):
        params.check_against(spec)
        self.params = params
        self.spec = spec
        self.train_set = train_set
        self.config = config
        self.mask = resolve_mask(config.trainable_mask, spec.num_layers)
        self.state = init_state(config.optimizer, params)
        self.step_count = 0
        self.last_lr: Optional[float] = None
        root = Rng(config.seed)
        self._shuffle_rng = root.fork()
        self._dropout_rng = root.fork()

    @property
    def steps_per_epoch(self) -> int:
        return steps_per_epoch(len(self.train_set), self.config.batch_size)

    def run_epoch(
        self,
        schedule: Union[ConstantSchedule, CyclicSchedule],
        step_offset: int = 0,
        on_step: Optional[Callable[["TrainingSession"], bool]] = None,
    ) -> EpochStats:
        """
        One pass over the (reshuffled) training set.

        The learning rate of each step is ``lr_at(schedule, step_count - step_offset)``.
        ``on_step`` runs after every update; returning True ends the epoch early.
        The loss and accuracy are averaged per example over the batches seen.
        """
        n = len(self.train_set)
        order = self._shuffle_rng.permutation(n) if self.config.shuffle_each_epoch else np.arange(n)
        total_loss = 0.0
        correct = 0
        seen = 0
        steps = 0
        for start in range(0, n, self.config.batch_size):
            index = order[start : start + self.config.batch_size]
            labels = self.train_set.labels[index]
            cache = forward(self.params, self.spec, self.train_set.features[index], "train", self._dropout_rng)
            total_loss += float(per_example_losses(cache.probs, labels).sum())
            correct += int(np.sum(np.argmax(cache.probs, axis=1) == labels))
            seen += index.size
            grads = backward(cache, self.params, self.spec, labels, self.mask)
            lr = lr_at(schedule, self.step_count - step_offset)
            self.params, self.state = step(self.config.optimizer, self.state, self.params, grads, lr, self.mask)
            self.step_count += 1
            self.last_lr = lr
            steps += 1
            if on_step is not None and on_step(self):
                break
        return EpochStats(loss=total_loss / seen, accuracy=correct / seen, lr=self.last_lr, steps=steps)
