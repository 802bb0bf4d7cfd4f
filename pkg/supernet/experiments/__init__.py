# supernet/experiments/__init__.py

"""
Module: experiments

Compositions of the training, ensemble and snapshot operations into complete
experiments.

Functions:
- train_branches(specs, train_set, val_set, config) -> list of TrainResult
- compare_regimes(root, k, train_set, val_set, test_set, epochs, tail_epochs, config) -> pandas.DataFrame
- run_pipeline(config, train_set, val_set, test_set) -> PipelineResult
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd

from supernet.datasets import Dataset
from supernet.ensemble import (
    ComparisonReport,
    FinalLayerInit,
    SuperNetModel,
    SuperNetSpec,
    build_supernet,
    compare,
    evaluate_supernet,
    partition,
    retrain_supernet,
)
from supernet.network import ModelParams, NetworkSpec, init_params
from supernet.persist.checkpoint import save_model, save_supernet
from supernet.persist.config import ExperimentConfig
from supernet.snapshots import Snapshot, harvest
from supernet.tensor import Rng
from supernet.trainer import (
    DescendingResult,
    TrainConfig,
    TrainResult,
    descending_layer_training,
    evaluate,
    retrain_last_layer,
    run_sessions,
    train,
    write_metrics_csv,
)

logger = logging.getLogger(__name__)

REGIME_COLUMNS = ["regime", "val_acc", "test_acc", "test_loss", "parameters", "cpu_seconds"]


def _seeded(config: TrainConfig, offset: int) -> TrainConfig:
    return config.model_copy(update={"seed": (config.seed + offset) % 2**64})


def _train_job(job: Tuple[NetworkSpec, Dataset, Dataset, TrainConfig]) -> TrainResult:
    spec, train_set, val_set, config = job
    return train(init_params(spec, Rng(config.seed)), spec, train_set, val_set, config)


def _retrain_job(job: Tuple[ModelParams, NetworkSpec, Dataset, Dataset, TrainConfig, int, bool]) -> TrainResult:
    params, spec, train_set, val_set, config, epochs, reinit = job
    return retrain_last_layer(params, spec, train_set, val_set, config, epochs=epochs, reinit=reinit)


def train_branches(
    specs: Sequence[NetworkSpec], train_set: Dataset, val_set: Dataset, config: TrainConfig
) -> List[TrainResult]:
    """
    Train one freshly initialized model per spec, branch i with seed
    ``config.seed + i`` for both its initialization and its session.
    Sessions run in parallel up to SNET_THREADS.
    """
    jobs = [(spec, train_set, val_set, _seeded(config, index)) for index, spec in enumerate(specs)]
    return run_sessions(_train_job, jobs)


def compare_regimes(
    root: NetworkSpec,
    k: int,
    train_set: Dataset,
    val_set: Dataset,
    test_set: Dataset,
    epochs: int,
    tail_epochs: int,
    config: TrainConfig,
    branch_dropout: Optional[float] = None,
) -> pd.DataFrame:
    """
    Three ways to spend the same epoch budget:

    - whole_network: ``root`` trained for ``epochs``
    - last_layer: ``root`` trained for ``epochs - tail_epochs``, then its last
      layer retrained for ``tail_epochs``
    - supernet: K branches of ``root`` trained for ``epochs - tail_epochs``,
      merged (copy_scaled, d = K) and the merged layer retrained for ``tail_epochs``

    One row per regime under REGIME_COLUMNS; ``cpu_seconds`` is process CPU
    time and is the only column that varies between identical runs.
    """
    head_epochs = epochs - tail_epochs
    rows = []

    start = time.process_time()
    whole = _train_job((root, train_set, val_set, config.model_copy(update={"max_epochs": epochs})))
    rows.append(_regime_row("whole_network", whole.params, root, val_set, test_set, root.parameter_count(), start))

    start = time.process_time()
    early = _train_job((root, train_set, val_set, config.model_copy(update={"max_epochs": head_epochs})))
    tail = retrain_last_layer(early.params, root, train_set, val_set, config, epochs=tail_epochs)
    rows.append(_regime_row("last_layer", tail.params, root, val_set, test_set, root.parameter_count(), start))

    start = time.process_time()
    plan = partition(root, k, branch_dropout)
    members = train_branches(plan.branch_specs, train_set, val_set, config.model_copy(update={"max_epochs": head_epochs}))
    spec = SuperNetSpec(
        [(branch, result.params) for branch, result in zip(plan.branch_specs, members)],
        FinalLayerInit(mode="copy_scaled", divisor=float(k)),
    )
    model, _ = retrain_supernet(build_supernet(spec, Rng(config.seed)), train_set, val_set, config, epochs=tail_epochs)
    val_report = evaluate_supernet(model, val_set)
    test_report = evaluate_supernet(model, test_set)
    rows.append(
        [
            "supernet",
            val_report.accuracy,
            test_report.accuracy,
            test_report.loss,
            model.parameter_count(),
            time.process_time() - start,
        ]
    )
    for row in rows:
        logger.info(f"regime {row[0]}: val_acc={row[1]:.4f} test_acc={row[2]:.4f}")
    return pd.DataFrame(rows, columns=REGIME_COLUMNS)


def _regime_row(name, params, spec, val_set, test_set, parameters, start) -> list:
    val_report = evaluate(params, spec, val_set)
    test_report = evaluate(params, spec, test_set)
    return [name, val_report.accuracy, test_report.accuracy, test_report.loss, parameters, time.process_time() - start]


@dataclass
class PipelineResult:
    spec: NetworkSpec
    base: TrainResult
    descending: DescendingResult
    snapshots: List[Snapshot]
    members: List[TrainResult]
    supernet: SuperNetModel
    supernet_training: TrainResult
    report: ComparisonReport

    def write(self, run_dir: Union[str, Path]) -> None:
        """Metrics CSVs and checkpoints of every stage, plus the comparison CSV."""
        run_dir = Path(run_dir)
        write_metrics_csv(self.base.history, run_dir / "metrics.csv")
        save_model(self.base.params, self.spec, run_dir / "model.snet")
        write_metrics_csv(self.descending.history, run_dir / "descending_metrics.csv")
        save_model(self.descending.params, self.spec, run_dir / "descending.snet")
        for snapshot, member in zip(self.snapshots, self.members):
            save_model(snapshot.params, self.spec, run_dir / f"snapshot_{snapshot.cycle}.snet")
            save_model(member.params, self.spec, run_dir / f"snapshot_{snapshot.cycle}_retrained.snet")
            write_metrics_csv(member.history, run_dir / f"snapshot_{snapshot.cycle}_retrain_metrics.csv")
        save_supernet(self.supernet, run_dir / "supernet.snet")
        write_metrics_csv(self.supernet_training.history, run_dir / "supernet_metrics.csv")
        self.report.to_csv(run_dir / "comparison.csv")


def run_pipeline(config: ExperimentConfig, train_set: Dataset, val_set: Dataset, test_set: Dataset) -> PipelineResult:
    """
    train -> descending layer training -> snapshot harvest -> last-layer
    retrain of every snapshot -> SuperNet of the retrained snapshots ->
    merged-layer retrain, compared with its members on the test set.

    Snapshot i is retrained with seed ``train.seed + i``; the SuperNet uses
    the [supernet] table, or copy_scaled with d = number of snapshots.
    """
    spec = config.network.spec()
    retrain = config.retrain
    logger.info("Pipeline stage 1/5: base training")
    base = _train_job((spec, train_set, val_set, config.train))

    logger.info("Pipeline stage 2/5: descending layer training")
    descending = descending_layer_training(
        base.params, spec, train_set, val_set, retrain.depth, config.train, retrain.epochs_per_layer
    )

    logger.info("Pipeline stage 3/5: snapshot harvest")
    snapshots = harvest(descending.params, spec, train_set, val_set, config.snapshot_config())

    logger.info("Pipeline stage 4/5: last-layer retraining of every snapshot")
    jobs = [
        (snap.params, spec, train_set, val_set, _seeded(config.train, snap.cycle), retrain.epochs, retrain.reinit)
        for snap in snapshots
    ]
    members = run_sessions(_retrain_job, jobs)

    logger.info("Pipeline stage 5/5: SuperNet")
    supernet_config = config.supernet
    init = supernet_config.init if supernet_config else FinalLayerInit(mode="copy_scaled", divisor=float(len(members)))
    spec_pairs = [(spec, member.params) for member in members]
    model = build_supernet(SuperNetSpec(spec_pairs, init), Rng(config.train.seed))
    model, supernet_training = retrain_supernet(
        model,
        train_set,
        val_set,
        config.train,
        epochs=supernet_config.epochs if supernet_config else retrain.epochs,
        l2_coeff=supernet_config.l2_coeff if supernet_config else None,
        l2_bias=supernet_config.l2_bias if supernet_config else None,
    )
    report = compare(model, test_set)
    return PipelineResult(
        spec=spec,
        base=base,
        descending=descending,
        snapshots=snapshots,
        members=members,
        supernet=model,
        supernet_training=supernet_training,
        report=report,
    )


__all__ = ["REGIME_COLUMNS", "PipelineResult", "compare_regimes", "run_pipeline", "train_branches"]
