# supernet/ensemble/__init__.py

"""
Module: ensemble

Partitioning a dense network into K branches, merging trained sub-models into
a SuperNet through one new softmax layer, retraining that layer, and the
majority/softmax voting baselines it is compared against.
"""

from supernet.ensemble.partition import PartitionPlan, partition
from supernet.ensemble.report import (
    COMPARISON_COLUMNS,
    SWEEP_COLUMNS,
    ComparisonReport,
    compare,
    ensemble_size_sweep,
    supernet_parameter_count,
)
from supernet.ensemble.supernet import (
    BranchOutputs,
    FinalLayerInit,
    SuperNetModel,
    SuperNetSpec,
    branch_outputs,
    build_supernet,
    evaluate_supernet,
    merged_dataset,
    retrain_supernet,
)
from supernet.ensemble.voting import majority_vote, softmax_vote

__all__ = [
    "COMPARISON_COLUMNS",
    "SWEEP_COLUMNS",
    "BranchOutputs",
    "ComparisonReport",
    "FinalLayerInit",
    "PartitionPlan",
    "SuperNetModel",
    "SuperNetSpec",
    "branch_outputs",
    "build_supernet",
    "compare",
    "ensemble_size_sweep",
    "evaluate_supernet",
    "majority_vote",
    "merged_dataset",
    "partition",
    "retrain_supernet",
    "softmax_vote",
    "supernet_parameter_count",
]
