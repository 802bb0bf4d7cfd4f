# supernet/network/model.py

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence

import numpy as np
import numpy.typing as npt

from supernet.errors import ConfigurationError, DataError, ShapeError
from supernet.network.spec import LayerSpec, NetworkSpec
from supernet.tensor import Matrix, Rng, as_matrix, check_finite, glorot_init, matmul, transpose


Mode = Literal["train", "eval"]

# Lower clamp on probabilities inside the cross-entropy
PROB_FLOOR = 1e-12


@dataclass
class ModelParams:
    """
    Weights and biases of a dense network, layer by layer.

    ``weights[l]`` has shape (in_l, out_l) and ``biases[l]`` shape (out_l,).
    Gradients use the same container.
    """

    weights: List[Matrix]
    biases: List[npt.NDArray[np.float64]]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ShapeError(f"{len(self.weights)} weight matrices but {len(self.biases)} bias vectors")
        for index, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[1]:
                raise ShapeError(f"layer {index}: weight {w.shape} does not match bias {b.shape}")
            if index and self.weights[index - 1].shape[1] != w.shape[0]:
                raise ShapeError(
                    f"layer {index}: input width {w.shape[0]} does not chain "
                    f"with previous output width {self.weights[index - 1].shape[1]}"
                )

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def equals(self, other: "ModelParams") -> bool:
        """Bitwise equality of every tensor."""
        if self.num_layers != other.num_layers:
            return False
        pairs = zip(self.weights + self.biases, other.weights + other.biases)
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)

    def check_against(self, spec: NetworkSpec) -> None:
        if self.num_layers != spec.num_layers:
            raise ShapeError(f"parameters have {self.num_layers} layers, spec has {spec.num_layers}")
        for index, (w, fan_in, layer) in enumerate(zip(self.weights, spec.fan_ins(), spec.layers)):
            if w.shape != (fan_in, layer.width):
                raise ShapeError(f"layer {index}: weight shape {w.shape} but spec needs {(fan_in, layer.width)}")

    @classmethod
    def zeros_like(cls, other: "ModelParams") -> "ModelParams":
        return cls([np.zeros_like(w) for w in other.weights], [np.zeros_like(b) for b in other.biases])


@dataclass
class ForwardCache:
    """Everything backward() needs from a forward pass."""

    inputs: Matrix
    pre: List[Matrix] = field(default_factory=list)
    post: List[Matrix] = field(default_factory=list)
    masks: List[Optional[Matrix]] = field(default_factory=list)

    @property
    def probs(self) -> Matrix:
        return self.post[-1]

    def penultimate(self) -> Matrix:
        """Activations feeding the softmax layer (the inputs for a one-layer net)."""
        return self.post[-2] if len(self.post) > 1 else self.inputs


def init_params(spec: NetworkSpec, rng: Rng) -> ModelParams:
    """Glorot-uniform weights and zero biases for every layer of ``spec``."""
    weights = [glorot_init(rng, fan_in, layer.width) for fan_in, layer in zip(spec.fan_ins(), spec.layers)]
    biases = [np.zeros(layer.width) for layer in spec.layers]
    return ModelParams(weights, biases)


def softmax(logits: Matrix) -> Matrix:
    """
    Row-wise softmax, computed as exp(z - rowmax) / sum.

    Example:
    >>> softmax([[1.0, 1.0]]).tolist()
    [[0.5, 0.5]]
    """
    z = as_matrix(logits, "logits")
    if z.size == 0:
        raise ShapeError(f"softmax of an empty matrix {z.shape}")
    check_finite(z, "logits")
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _activate(z: Matrix, layer: LayerSpec) -> Matrix:
    if layer.activation == "relu":
        return np.maximum(z, 0.0)
    if layer.activation == "elu":
        return np.where(z > 0.0, z, layer.elu_alpha * np.expm1(np.minimum(z, 0.0)))
    if layer.activation == "softmax":
        return softmax(z)
    return z.copy()


def _activation_grad(z: Matrix, layer: LayerSpec) -> Matrix:
    if layer.activation == "relu":
        return (z > 0.0).astype(np.float64)
    if layer.activation == "elu":
        return np.where(z > 0.0, 1.0, layer.elu_alpha * np.exp(np.minimum(z, 0.0)))
    return np.ones_like(z)


def check_labels(labels, n: int, num_classes: int) -> npt.NDArray[np.int64]:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise DataError(f"expected {n} labels, got array of shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= num_classes):
        bad = int(np.flatnonzero((labels < 0) | (labels >= num_classes))[0])
        raise DataError(f"label {labels[bad]} at index {bad} is outside [0, {num_classes})")
    return labels.astype(np.int64)


def per_example_losses(probs: Matrix, labels) -> npt.NDArray[np.float64]:
    """-ln p(true class) for each row, with p clamped to [1e-12, 1]."""
    probs = as_matrix(probs, "probabilities")
    labels = check_labels(labels, probs.shape[0], probs.shape[1])
    picked = probs[np.arange(probs.shape[0]), labels]
    return -np.log(np.clip(picked, PROB_FLOOR, 1.0))


def cross_entropy(probs: Matrix, labels) -> float:
    """
    Mean categorical cross-entropy over the batch, without any L2 penalty.

    Example:
    >>> round(cross_entropy([[0.5, 0.5]], [0]), 6)
    0.693147
    """
    losses = per_example_losses(probs, labels)
    if losses.size == 0:
        raise DataError("cross-entropy of an empty batch")
    return float(losses.mean())


def l2_penalty(params: ModelParams, spec: NetworkSpec) -> float:
    total = 0.0
    for w, b, layer in zip(params.weights, params.biases, spec.layers):
        if layer.l2_coeff:
            total += layer.l2_coeff * float(np.sum(w * w))
            if layer.l2_bias:
                total += layer.l2_coeff * float(np.sum(b * b))
    return total


def forward(
    params: ModelParams,
    spec: NetworkSpec,
    batch: Matrix,
    mode: Mode = "eval",
    rng: Optional[Rng] = None,
) -> ForwardCache:
    """
    Dense forward pass.

    z_l = a_(l-1) W_l + b_l and a_l = activation(z_l). In ``train`` mode each
    layer with a dropout rate r multiplies a_l by an inverted-dropout mask
    (keep with probability 1 - r, kept entries scaled by 1 / (1 - r)) drawn
    from ``rng``; ``eval`` mode applies no mask.

    Parameters:
    - batch (Matrix): One example per row, ``spec.input_dim`` columns.
    - mode (str): ``"train"`` or ``"eval"``.
    - rng (Rng, optional): Dropout stream; required in train mode when any
      layer has a dropout rate.

    Returns:
    - ForwardCache: Pre-activations, activations and dropout masks of every
      layer; ``probs`` is the last activation.
    """
    if mode not in ("train", "eval"):
        raise ConfigurationError(f"unknown forward mode {mode!r}")
    x = as_matrix(batch, "batch")
    params.check_against(spec)
    if x.shape[1] != spec.input_dim:
        raise ShapeError(f"batch has {x.shape[1]} features, network expects {spec.input_dim}")

    cache = ForwardCache(inputs=x)
    a = x
    for index, (layer, w, b) in enumerate(zip(spec.layers, params.weights, params.biases)):
        z = check_finite(matmul(a, w) + b, f"pre-activation of layer {index}")
        a = _activate(z, layer)
        mask = None
        if mode == "train" and layer.dropout_rate > 0.0:
            if rng is None:
                raise ConfigurationError("train-mode forward with dropout needs an Rng")
            keep = 1.0 - layer.dropout_rate
            mask = rng.bernoulli_mask(a.shape, keep) / keep
            a = a * mask
        cache.pre.append(z)
        cache.post.append(a)
        cache.masks.append(mask)
    return cache


def resolve_mask(trainable_mask: Optional[Sequence[bool]], num_layers: int) -> List[bool]:
    if trainable_mask is None:
        return [True] * num_layers
    mask = [bool(flag) for flag in trainable_mask]
    if len(mask) != num_layers:
        raise ConfigurationError(f"trainable mask has {len(mask)} entries for {num_layers} layers")
    return mask


def backward(
    cache: ForwardCache,
    params: ModelParams,
    spec: NetworkSpec,
    labels,
    trainable_mask: Optional[Sequence[bool]] = None,
) -> ModelParams:
    """
    Gradients of cross_entropy + sum_l l2_l * ||W_l||^2 (plus ||b_l||^2 where
    l2_bias is set) with respect to every trainable layer.

    The softmax and cross-entropy are differentiated together, giving
    (p - onehot) / batch at the output. Frozen layers receive zero gradients
    and propagation stops below the lowest trainable layer.

    Raises:
    - ShapeError: if the cache does not come from a forward pass of these params.
    - DataError: if a label is out of range.
    """
    params.check_against(spec)
    mask = resolve_mask(trainable_mask, spec.num_layers)
    if len(cache.post) != spec.num_layers or any(
        a.shape[1] != w.shape[1] for a, w in zip(cache.post, params.weights)
    ):
        raise ShapeError("forward cache does not match the parameters")
    probs = cache.probs
    batch_size = probs.shape[0]
    labels = check_labels(labels, batch_size, spec.num_classes)

    grads = ModelParams.zeros_like(params)
    if not any(mask):
        return grads
    lowest = mask.index(True)

    delta = probs.copy()
    delta[np.arange(batch_size), labels] -= 1.0
    delta /= batch_size
    for index in range(spec.num_layers - 1, lowest - 1, -1):
        layer = spec.layers[index]
        a_prev = cache.inputs if index == 0 else cache.post[index - 1]
        if mask[index]:
            grad_w = matmul(transpose(a_prev), delta)
            grad_b = delta.sum(axis=0)
            if layer.l2_coeff:
                grad_w = grad_w + 2.0 * layer.l2_coeff * params.weights[index]
                if layer.l2_bias:
                    grad_b = grad_b + 2.0 * layer.l2_coeff * params.biases[index]
            grads.weights[index] = grad_w
            grads.biases[index] = grad_b
        if index > lowest:
            upstream = matmul(delta, transpose(params.weights[index]))
            if cache.masks[index - 1] is not None:
                upstream = upstream * cache.masks[index - 1]
            delta = upstream * _activation_grad(cache.pre[index - 1], spec.layers[index - 1])
    return grads
