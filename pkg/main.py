# main.py

"""
Command-line driver.

Every command reads one TOML experiment file, writes its outputs under the
run directory (``output_dir`` of the config, or ``--output-dir``) together
with a verbatim ``config.toml`` and a ``manifest.json``, and prints a one-line
JSON summary on stdout. Any failure is logged and reported as one JSON line
``{"error": ..., "message": ..., "exit_code": ...}`` on stderr.

Exit codes: 0 success, 1 usage or configuration, 2 data or file format,
3 numeric failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError

from supernet.analysis import (
    export_penultimate_features,
    loss_stats,
    mean_offdiagonal,
    similarity_matrix,
    write_loss_stats_csv,
    write_per_example_losses_csv,
    write_similarity_csv,
)
from supernet.ensemble import (
    SuperNetModel,
    SuperNetSpec,
    build_supernet,
    compare,
    ensemble_size_sweep,
    partition,
    retrain_supernet,
)
from supernet.errors import ConfigurationError, SupernetError
from supernet.experiments import compare_regimes, run_pipeline, train_branches
from supernet.network import init_params
from supernet.persist import (
    ExperimentConfig,
    load_checkpoint,
    load_config,
    load_data,
    load_model,
    prepare_run_dir,
    save_model,
    save_supernet,
)
from supernet.settings import get_settings
from supernet.snapshots import harvest
from supernet.tensor import Rng
from supernet.trainer import (
    descending_layer_training,
    evaluate,
    retrain_last_layer,
    train,
    write_metrics_csv,
)

logger = logging.getLogger(__name__)


class ErrorResponse(BaseModel):
    error: str = Field(..., description="Error kind")
    message: str = Field(..., description="Error message")
    exit_code: int = Field(..., description="Process exit code")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors as exceptions instead of exiting with 2."""

    def error(self, message):
        raise UsageError(message)


class Run:
    """Config, data splits and run directory shared by the command handlers."""

    def __init__(self, command: str, args: argparse.Namespace, inputs: Sequence[Path] = (), analyzes: bool = False):
        self.command = command
        self.config: ExperimentConfig = load_config(args.config)
        # commands reading analysis_set record which split they used
        extra = {"split": self.config.analysis.split} if analyzes else None
        self.dir = prepare_run_dir(command, args.config, self.config, inputs, args.output_dir, extra)
        self.train_set, self.val_set, self.test_set = load_data(self.config)

    @property
    def analysis_set(self):
        return self.val_set if self.config.analysis.split == "val" else self.test_set


# -----------------------------------------------------------------------------------
# Command handlers
# -----------------------------------------------------------------------------------


def cmd_train(args) -> Dict[str, Any]:
    """Train one network from scratch; writes model.snet and metrics.csv."""
    run = Run("train", args)
    spec = run.config.network.spec()
    result = train(init_params(spec, Rng(run.config.train.seed)), spec, run.train_set, run.val_set, run.config.train)
    write_metrics_csv(result.history, run.dir / "metrics.csv")
    save_model(result.params, spec, run.dir / "model.snet")
    for epoch, params in result.captures.items():
        save_model(params, spec, run.dir / f"model_epoch_{epoch}.snet")
    report = evaluate(result.params, spec, run.val_set)
    return {"run_dir": str(run.dir), "best_epoch": result.best_epoch, "val_acc": report.accuracy}


def cmd_partition_train(args) -> Dict[str, Any]:
    """Split the configured network into [partition] k branches and train each independently."""
    run = Run("partition-train", args)
    settings = run.config.require("partition")
    plan = partition(run.config.network.spec(), settings.k, settings.branch_dropout)
    results = train_branches(plan.branch_specs, run.train_set, run.val_set, run.config.train)
    accuracies = []
    for index, (spec, result) in enumerate(zip(plan.branch_specs, results)):
        save_model(result.params, spec, run.dir / f"branch_{index}.snet")
        write_metrics_csv(result.history, run.dir / f"branch_{index}_metrics.csv")
        accuracies.append(evaluate(result.params, spec, run.val_set).accuracy)
    return {"run_dir": str(run.dir), "k": plan.k, "branch_val_acc": accuracies}


def cmd_supernet(args) -> Dict[str, Any]:
    """
    Merge branch checkpoints into a SuperNet, retrain its softmax layer and
    compare it with the branches and both voting rules on the analysis split.
    """
    paths = [Path(p) for p in args.branches]
    run = Run("supernet", args, paths, analyzes=True)
    settings = run.config.require("supernet")
    paths = paths or list(settings.branches)
    if not paths:
        raise ConfigurationError("no branch checkpoints: pass them on the command line or set supernet.branches")
    branches = [load_model(path) for path in paths]
    pairs = [(spec, params) for params, spec in branches]
    model = build_supernet(SuperNetSpec(pairs, settings.init), Rng(run.config.train.seed))
    compare(model, run.analysis_set).to_csv(run.dir / "comparison_initial.csv")

    model, result = retrain_supernet(
        model, run.train_set, run.val_set, run.config.train, settings.epochs, settings.l2_coeff, settings.l2_bias
    )
    write_metrics_csv(result.history, run.dir / "metrics.csv")
    save_supernet(model, run.dir / "supernet.snet")
    report = compare(model, run.analysis_set)
    report.to_csv(run.dir / "comparison.csv")
    if settings.size_sweep:
        sweep = ensemble_size_sweep(
            pairs, run.train_set, run.val_set, run.analysis_set, run.config.train,
            init=None if settings.init.mode == "copy_scaled" else settings.init, epochs=settings.epochs,
        )
        sweep.to_csv(run.dir / "size_sweep.csv", index=False, lineterminator="\n")
    return {
        "run_dir": str(run.dir),
        "supernet_acc": report.supernet.accuracy,
        "best_branch_acc": report.best_branch_acc,
        "majority_vote_acc": report.majority_vote_acc,
        "softmax_vote_acc": report.softmax_vote_acc,
        "parameters": model.parameter_count(),
    }


def cmd_snapshot(args) -> Dict[str, Any]:
    """Harvest cyclic-lr snapshots, from --checkpoint or from a freshly trained model."""
    inputs = [Path(args.checkpoint)] if args.checkpoint else []
    run = Run("snapshot", args, inputs)
    snapshot_config = run.config.snapshot_config()
    if args.checkpoint:
        params, spec = load_model(args.checkpoint)
    else:
        spec = run.config.network.spec()
        base = train(init_params(spec, Rng(run.config.train.seed)), spec, run.train_set, run.val_set, run.config.train)
        write_metrics_csv(base.history, run.dir / "metrics.csv")
        save_model(base.params, spec, run.dir / "model.snet")
        params = base.params
    snapshots = harvest(params, spec, run.train_set, run.val_set, snapshot_config)
    for snap in snapshots:
        save_model(snap.params, spec, run.dir / f"snapshot_{snap.cycle}.snet")
    return {"run_dir": str(run.dir), "snapshot_val_acc": [snap.report.accuracy for snap in snapshots]}


def cmd_retrain_last(args) -> Dict[str, Any]:
    run = Run("retrain-last", args, [Path(args.checkpoint)])
    params, spec = load_model(args.checkpoint)
    settings = run.config.retrain
    result = retrain_last_layer(
        params, spec, run.train_set, run.val_set, run.config.train,
        epochs=settings.epochs, reinit=settings.reinit, l2_coeff=settings.l2_coeff, l2_bias=settings.l2_bias,
    )
    write_metrics_csv(result.history, run.dir / "metrics.csv")
    save_model(result.params, spec, run.dir / "retrained.snet")
    before = evaluate(params, spec, run.val_set).accuracy
    after = evaluate(result.params, spec, run.val_set).accuracy
    return {"run_dir": str(run.dir), "val_acc_before": before, "val_acc_after": after}


def cmd_retrain_descending(args) -> Dict[str, Any]:
    run = Run("retrain-descending", args, [Path(args.checkpoint)])
    params, spec = load_model(args.checkpoint)
    settings = run.config.retrain
    result = descending_layer_training(
        params, spec, run.train_set, run.val_set, settings.depth, run.config.train, settings.epochs_per_layer
    )
    write_metrics_csv(result.history, run.dir / "metrics.csv")
    save_model(result.params, spec, run.dir / "retrained.snet")
    before = evaluate(params, spec, run.val_set).accuracy
    after = evaluate(result.params, spec, run.val_set).accuracy
    return {"run_dir": str(run.dir), "val_acc_before": before, "val_acc_after": after}


def cmd_evaluate(args) -> Dict[str, Any]:
    """Loss, accuracy and per-example loss statistics of one checkpoint on the analysis split."""
    run = Run("evaluate", args, [Path(args.checkpoint)], analyzes=True)
    model = load_checkpoint(args.checkpoint)
    dataset = run.analysis_set
    if isinstance(model, SuperNetModel):
        report = compare(model, dataset).supernet
    else:
        params, spec = model
        report = evaluate(params, spec, dataset)
    stats = loss_stats(report.per_example_losses)
    write_loss_stats_csv({Path(args.checkpoint).stem: stats}, run.dir / "loss_stats.csv")
    write_per_example_losses_csv(
        {Path(args.checkpoint).stem: report.per_example_losses}, dataset.labels, run.dir / "per_example_losses.csv"
    )
    return {
        "run_dir": str(run.dir),
        "split": run.config.analysis.split,
        "loss": report.loss,
        "accuracy": report.accuracy,
        **stats.model_dump(),
    }


def cmd_analyze(args) -> Dict[str, Any]:
    """
    Similarity matrix, loss statistics and (optionally) penultimate features
    of one or more checkpoints on the analysis split.
    """
    paths = [Path(p) for p in args.checkpoints]
    run = Run("analyze", args, paths, analyzes=True)
    dataset = run.analysis_set
    names = [f"model_{index}_{path.stem}" for index, path in enumerate(paths)]
    predictions, losses, stats = [], {}, {}
    for index, (name, path) in enumerate(zip(names, paths)):
        params, spec = load_model(path)
        report = evaluate(params, spec, dataset)
        predictions.append(report.predictions)
        losses[name] = report.per_example_losses
        stats[name] = loss_stats(report.per_example_losses)
        if run.config.analysis.export_features:
            export_penultimate_features(params, spec, dataset, run.dir / f"features_{index}.csv")
    write_loss_stats_csv(stats, run.dir / "loss_stats.csv")
    write_per_example_losses_csv(losses, dataset.labels, run.dir / "per_example_losses.csv")
    summary: Dict[str, Any] = {"run_dir": str(run.dir), "split": run.config.analysis.split, "models": names}
    if len(predictions) >= 2:
        sim = similarity_matrix(predictions)
        write_similarity_csv(sim, run.dir / "similarity.csv")
        summary["mean_offdiagonal"] = mean_offdiagonal(sim)
    else:
        logger.warning("Similarity needs at least two checkpoints; skipping similarity.csv")
    return summary


def cmd_pipeline(args) -> Dict[str, Any]:
    """Train, boost with descending training, harvest snapshots and merge them."""
    run = Run("pipeline", args)
    run.config.require("snapshot")
    result = run_pipeline(run.config, run.train_set, run.val_set, run.test_set)
    result.write(run.dir)
    return {
        "run_dir": str(run.dir),
        "supernet_acc": result.report.supernet.accuracy,
        "best_member_acc": result.report.best_branch_acc,
        "softmax_vote_acc": result.report.softmax_vote_acc,
    }


def cmd_regimes(args) -> Dict[str, Any]:
    run = Run("regimes", args)
    settings = run.config.require("regimes")
    branch_dropout = run.config.partition.branch_dropout if run.config.partition else None
    frame = compare_regimes(
        run.config.network.spec(), settings.k, run.train_set, run.val_set, run.test_set,
        settings.epochs, settings.tail_epochs, run.config.train, branch_dropout,
    )
    frame.to_csv(run.dir / "regimes.csv", index=False, lineterminator="\n")
    return {"run_dir": str(run.dir), "test_acc": dict(zip(frame["regime"], frame["test_acc"]))}


COMMANDS = {
    "train": cmd_train,
    "partition-train": cmd_partition_train,
    "supernet": cmd_supernet,
    "snapshot": cmd_snapshot,
    "retrain-last": cmd_retrain_last,
    "retrain-descending": cmd_retrain_descending,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "pipeline": cmd_pipeline,
    "regimes": cmd_regimes,
}


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = ArgumentParser(prog="main.py", description="Train dense classifiers, SuperNets and snapshot ensembles.")
    parser.add_argument("--output-dir", default=None, help="Run directory (overrides output_dir of the config)")
    parser.add_argument("--log-level", default=None, help="Logging level (overrides SNET_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("train", "partition-train", "pipeline", "regimes"):
        sub.add_parser(name).add_argument("config", help="TOML experiment file")

    supernet_cmd = sub.add_parser("supernet")
    supernet_cmd.add_argument("config", help="TOML experiment file")
    supernet_cmd.add_argument("branches", nargs="*", help="Branch checkpoints (default: supernet.branches)")

    snapshot_cmd = sub.add_parser("snapshot")
    snapshot_cmd.add_argument("config", help="TOML experiment file")
    snapshot_cmd.add_argument("--checkpoint", default=None, help="Pre-trained model (default: train one first)")

    for name in ("retrain-last", "retrain-descending", "evaluate"):
        command = sub.add_parser(name)
        command.add_argument("checkpoint", help="Model checkpoint")
        command.add_argument("config", help="TOML experiment file")

    analyze_cmd = sub.add_parser("analyze")
    analyze_cmd.add_argument("paths", nargs="+", help="One or more checkpoints followed by the TOML experiment file")

    args = parser.parse_args(argv)
    if args.command == "analyze":
        if len(args.paths) < 2:
            raise UsageError("analyze needs at least one checkpoint and a config file")
        args.checkpoints, args.config = args.paths[:-1], args.paths[-1]
    return args


def _failure(kind: str, message: str, exit_code: int) -> int:
    logger.error(f"{kind}: {message}")
    response = ErrorResponse(error=kind, message=message, exit_code=exit_code)
    print(json.dumps(response.model_dump()), file=sys.stderr)
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point.

    Parameters:
    - argv (list of str, optional): Arguments without the program name;
      ``sys.argv[1:]`` when None.

    Returns:
    - int: Exit code; 0 on success, otherwise the code of the error printed
      as one JSON line on stderr.
    """
    try:
        args = parse_arguments(argv)
    except UsageError as exc:
        return _failure("UsageError", str(exc), 1)

    try:
        level = (args.log_level or get_settings().log_level).upper()
    except ValidationError as exc:
        return _failure("ConfigurationError", str(exc).replace("\n", " "), 1)
    try:
        logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    except ValueError as exc:
        return _failure("ConfigurationError", str(exc), 1)

    try:
        summary = COMMANDS[args.command](args)
    except SupernetError as exc:
        return _failure(type(exc).__name__, exc.message.replace("\n", " "), exc.exit_code)
    except ValidationError as exc:
        message = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors())
        return _failure("ConfigurationError", message, 1)
    except OSError as exc:
        return _failure(type(exc).__name__, str(exc), 2)

    print(json.dumps({"command": args.command, **summary}, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
