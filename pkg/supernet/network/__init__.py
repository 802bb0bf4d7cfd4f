# supernet/network/__init__.py

"""
Module: network

Dense feed-forward classifiers: architecture specs, parameters, the forward
pass with inverted dropout, categorical cross-entropy and manual
backpropagation with per-layer L2 regularization.
"""

from supernet.network.model import (
    PROB_FLOOR,
    ForwardCache,
    ModelParams,
    backward,
    check_labels,
    cross_entropy,
    forward,
    init_params,
    l2_penalty,
    per_example_losses,
    resolve_mask,
    softmax,
)
from supernet.network.spec import Activation, LayerSpec, NetworkSpec

__all__ = [
    "PROB_FLOOR",
    "Activation",
    "ForwardCache",
    "LayerSpec",
    "ModelParams",
    "NetworkSpec",
    "backward",
    "check_labels",
    "cross_entropy",
    "forward",
    "init_params",
    "l2_penalty",
    "per_example_losses",
    "resolve_mask",
    "softmax",
]
