# supernet/ensemble/partition.py

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from supernet.errors import ConfigurationError
from supernet.network import LayerSpec, NetworkSpec


class PartitionPlan(BaseModel):
    """A dense network cut into k equal-width branches without cross connections."""

    model_config = ConfigDict(frozen=True)

    root: NetworkSpec
    k: int = Field(..., ge=1, description="Number of branches")
    branch_specs: List[NetworkSpec]

    @model_validator(mode="after")
    def check_widths(self) -> "PartitionPlan":
        if len(self.branch_specs) != self.k:
            raise ValueError(f"{len(self.branch_specs)} branch specs for k={self.k}")
        totals = [sum(widths) for widths in zip(*(branch.hidden_widths for branch in self.branch_specs))]
        if totals != self.root.hidden_widths:
            raise ValueError(f"branch hidden widths sum to {totals}, root has {self.root.hidden_widths}")
        return self


def partition(root: NetworkSpec, k: int, branch_dropout: Optional[float] = None) -> PartitionPlan:
    """
    Split every hidden layer of ``root`` into ``k`` equal parts.

    Each branch keeps the root's activations, dropout and L2, and ends in its
    own softmax head of ``num_classes`` so it can be trained on its own.
    ``branch_dropout`` replaces the hidden-layer dropout of the branches.

    Raises:
    - ConfigurationError: if a hidden width is not divisible by ``k``.

    Example:
    >>> plan = partition(NetworkSpec.mlp(784, [360, 840, 840, 10]), 6)
    >>> plan.branch_specs[0].hidden_widths
    [60, 140, 140]
    """
    if k < 1:
        raise ConfigurationError(f"k must be at least 1, got {k}")
    hidden: List[LayerSpec] = []
    for index, layer in enumerate(root.layers[:-1]):
        if layer.width % k:
            raise ConfigurationError(f"layer {index} width {layer.width} is not divisible by k={k}")
        update = {"width": layer.width // k}
        if branch_dropout is not None:
            update["dropout_rate"] = branch_dropout
        hidden.append(LayerSpec.model_validate({**layer.model_dump(), **update}))
    branch = NetworkSpec(input_dim=root.input_dim, layers=hidden + [root.layers[-1]])
    return PartitionPlan(root=root, k=k, branch_specs=[branch] * k)
