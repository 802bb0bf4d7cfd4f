# tests/unit/test_ensemble.py

import numpy as np
import pytest

from supernet.ensemble import (
    COMPARISON_COLUMNS,
    SWEEP_COLUMNS,
    FinalLayerInit,
    SuperNetSpec,
    branch_outputs,
    build_supernet,
    compare,
    ensemble_size_sweep,
    evaluate_supernet,
    majority_vote,
    partition,
    retrain_supernet,
    softmax_vote,
    supernet_parameter_count,
)
from supernet.errors import ConfigurationError, DataError, ShapeError
from supernet.network import ModelParams, NetworkSpec, forward, init_params
from supernet.tensor import Rng
from supernet.trainer import evaluate, train


@pytest.fixture
def trained_branches(blob_splits, fast_config):
    """Two halves of a 12/8 network, trained independently on the blobs."""
    train_set, val_set, _ = blob_splits
    plan = partition(NetworkSpec.mlp(4, [12, 8, 3]), 2)
    branches = []
    for index, spec in enumerate(plan.branch_specs):
        config = fast_config.model_copy(update={"seed": index})
        result = train(init_params(spec, Rng(100 + index)), spec, train_set, val_set, config)
        branches.append((spec, result.params))
    return branches


def hand_branch(weight, bias):
    spec = NetworkSpec.mlp(2, [2, 2])
    hidden = np.array([[1.0, 0.0], [0.0, 1.0]])
    return spec, ModelParams([hidden, np.array(weight)], [np.zeros(2), np.array(bias)])


# ---------------------------------------------
# Partitioning
# ---------------------------------------------

@pytest.mark.parametrize(
    "widths, k, branch_widths",
    [
        ([360, 840, 840, 10], 6, [60, 140, 140]),
        ([240, 560, 560, 10], 4, [60, 140, 140]),
        ([360, 840, 840, 10], 1, [360, 840, 840]),
    ],
    ids=["six_branches", "four_branches", "single_branch"],
)
def test_partition_widths(widths, k, branch_widths):
    """Every hidden layer is divided by k; the softmax layer keeps the class count."""
    root = NetworkSpec.mlp(784, widths)
    plan = partition(root, k)
    assert len(plan.branch_specs) == k
    assert all(spec.hidden_widths == branch_widths for spec in plan.branch_specs)
    assert all(spec.num_classes == 10 for spec in plan.branch_specs)


def test_partition_single_branch_is_root():
    root = NetworkSpec.mlp(10, [6, 4, 3], dropout_rate=0.2)
    assert partition(root, 1).branch_specs[0] == root


def test_partition_rejects_non_divisible_width():
    """The error names the first hidden layer whose width k does not divide."""
    with pytest.raises(ConfigurationError, match="layer 1"):
        partition(NetworkSpec.mlp(4, [12, 9, 3]), 2)


def test_partition_branch_dropout():
    plan = partition(NetworkSpec.mlp(4, [12, 8, 3], dropout_rate=0.1), 4, branch_dropout=0.3)
    assert all(layer.dropout_rate == 0.3 for layer in plan.branch_specs[0].layers[:-1])
    assert plan.branch_specs[0].layers[-1].dropout_rate == 0.0


def test_partition_has_fewer_parameters_than_root():
    """Branches drop the connections between parts, so their hidden layers hold fewer weights."""
    root = NetworkSpec.mlp(4, [12, 8, 3])
    plan = partition(root, 2)
    hidden = sum(spec.parameter_count(include_head=False) for spec in plan.branch_specs)
    assert hidden < root.parameter_count(include_head=False)
    assert sum(sum(spec.hidden_widths) for spec in plan.branch_specs) == sum(root.hidden_widths)


# ---------------------------------------------
# build_supernet
# ---------------------------------------------

def test_copy_scaled_identical_branches_reproduce_member():
    """K copies of one network, merged with weights divided by K and bias kept, predict exactly like the network."""
    spec = NetworkSpec.mlp(5, [7, 4])
    params = init_params(spec, Rng(3))
    params = ModelParams(params.weights, [Rng(4).normal(b.shape) for b in params.biases])
    k = 4
    model = build_supernet(
        SuperNetSpec([(spec, params)] * k, FinalLayerInit(mode="copy_scaled", divisor=k)), Rng(0)
    )
    x = Rng(5).normal((50, 5))
    member = forward(params, spec, x, "eval").probs
    merged = forward(model.head_params(), model.head_spec(), np.hstack([forward(params, spec, x, "eval").penultimate()] * k), "eval").probs
    assert np.max(np.abs(merged - member)) <= 1e-12


def test_single_branch_copy_is_exact(blob_splits, trained_branches):
    _, _, test_set = blob_splits
    model = build_supernet(SuperNetSpec(trained_branches[:1]), Rng(0))
    spec, params = trained_branches[0]
    assert np.array_equal(
        evaluate_supernet(model, test_set).probabilities, evaluate(params, spec, test_set).probabilities
    ), "one copied branch must equal the branch itself"


def test_two_branch_merged_layer():
    """Copy init stacks the branch weights vertically and sums the biases."""
    first = hand_branch([[1.0, 2.0], [3.0, 4.0]], [0.5, -1.0])
    second = hand_branch([[5.0, 6.0], [7.0, 8.0]], [1.5, 3.0])
    model = build_supernet(SuperNetSpec([first, second]), Rng(0))
    assert model.head_weight.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]
    assert model.head_bias.tolist() == [1.0, 1.0]


def test_copy_scaled_divides_weights_not_bias():
    """Only weights are divided unless scale_bias is set."""
    first = hand_branch([[2.0, 4.0], [6.0, 8.0]], [2.0, 4.0])
    model = build_supernet(SuperNetSpec([first], FinalLayerInit(mode="copy_scaled", divisor=2.0)), Rng(0))
    assert model.head_weight.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert model.head_bias.tolist() == [2.0, 4.0]
    scaled = build_supernet(
        SuperNetSpec([first], FinalLayerInit(mode="copy_scaled", divisor=2.0, scale_bias=True)), Rng(0)
    )
    assert scaled.head_bias.tolist() == [1.0, 2.0]


def test_random_init():
    """Glorot weights over the 4 merged inputs and zero bias."""
    branch = hand_branch([[1.0, 2.0], [3.0, 4.0]], [0.5, -1.0])
    model = build_supernet(SuperNetSpec([branch, branch], FinalLayerInit(mode="random")), Rng(0))
    assert model.head_weight.shape == (4, 2)
    assert not np.any(model.head_bias)
    assert np.all(np.abs(model.head_weight) <= np.sqrt(6.0 / 6))


def test_incompatible_branches():
    other = NetworkSpec.mlp(2, [2, 3])
    with pytest.raises(ShapeError):
        SuperNetSpec([hand_branch([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]), (other, init_params(other, Rng(0)))])
    with pytest.raises(ShapeError):
        SuperNetSpec([])


def test_parameter_count_identity(trained_branches):
    """Branch hidden parameters plus one merged softmax layer, still fewer than the root network."""
    model = build_supernet(SuperNetSpec(trained_branches), Rng(0))
    hidden = sum(spec.parameter_count(include_head=False) for spec, _ in trained_branches)
    assert supernet_parameter_count(model) == hidden + 8 * 3 + 3
    assert supernet_parameter_count(model) < NetworkSpec.mlp(4, [12, 8, 3]).parameter_count()


# ---------------------------------------------
# retrain_supernet
# ---------------------------------------------

def test_retrain_leaves_branches_untouched(blob_splits, trained_branches, fast_config):
    """Only the merged layer moves; the L2 override is stored on the head layer."""
    train_set, val_set, _ = blob_splits
    model = build_supernet(SuperNetSpec(trained_branches), Rng(0))
    retrained, result = retrain_supernet(model, train_set, val_set, fast_config, epochs=2, l2_coeff=0.001, l2_bias=True)
    for (_, before), (_, after) in zip(trained_branches, retrained.branches):
        assert before.equals(after), "branch parameters must be bitwise invariant"
    assert not np.array_equal(retrained.head_weight, model.head_weight)
    assert retrained.head_layer.l2_coeff == 0.001 and retrained.head_layer.l2_bias
    assert len(result.history) == 2


def test_retrain_zero_epochs(blob_splits, trained_branches, fast_config):
    train_set, val_set, _ = blob_splits
    model = build_supernet(SuperNetSpec(trained_branches), Rng(0))
    retrained, _ = retrain_supernet(model, train_set, val_set, fast_config, epochs=0)
    assert np.array_equal(retrained.head_weight, model.head_weight)
    assert np.array_equal(retrained.head_bias, model.head_bias)
    with pytest.raises(ConfigurationError):
        retrain_supernet(model, train_set, val_set, fast_config, epochs=-1)


# ---------------------------------------------
# Voting
# ---------------------------------------------

@pytest.mark.parametrize(
    "voters, expected",
    [
        ([[2, 0], [2, 1], [5, 1]], [2, 1]),
        ([[4, 0, 1]] * 3, [4, 0, 1]),
        ([[3], [1]], [1]),
    ],
    ids=["majority", "identical_voters", "tie_goes_low"],
)
def test_majority_vote(voters, expected):
    """Most frequent class per example; ties go to the lowest class index."""
    assert majority_vote(voters).tolist() == expected


def test_majority_vote_errors():
    with pytest.raises(ConfigurationError):
        majority_vote([])
    with pytest.raises(DataError):
        majority_vote([[0, 1], [0]])


def test_softmax_vote_sum():
    """Summed probabilities [1.25, 1.75] pick class 1."""
    probs = [np.array([[0.6, 0.4]]), np.array([[0.2, 0.8]]), np.array([[0.45, 0.55]])]
    assert softmax_vote(probs).tolist() == [1]


def test_softmax_vote_single_and_identical_voters():
    probs = Rng(6).random((20, 4))
    single = softmax_vote([probs])
    assert np.array_equal(single, np.argmax(probs, axis=1))
    assert np.array_equal(softmax_vote([probs] * 5), single)


def test_softmax_vote_scale_invariance():
    """Multiplying every voter's probabilities by one constant does not change the vote."""
    rng = Rng(7)
    probs = [rng.random((30, 5)) for _ in range(3)]
    assert np.array_equal(softmax_vote(probs), softmax_vote([p * 3.5 for p in probs]))


def test_softmax_vote_shape_mismatch():
    with pytest.raises(ShapeError):
        softmax_vote([np.ones((2, 3)), np.ones((2, 4))])


# ---------------------------------------------
# Comparison and size sweep
# ---------------------------------------------

def test_compare_uses_one_branch_pass(blob_splits, trained_branches):
    """Vote accuracies come from the same branch outputs as the SuperNet row; votes have no loss."""
    _, _, test_set = blob_splits
    model = build_supernet(SuperNetSpec(trained_branches, FinalLayerInit(mode="copy_scaled", divisor=2)), Rng(0))
    report = compare(model, test_set)
    outputs = branch_outputs(model, test_set)
    expected_soft = np.mean(softmax_vote(outputs.probabilities) == test_set.labels)
    assert report.softmax_vote_acc == expected_soft
    assert report.best_branch_acc == max(r.accuracy for r in report.branches)
    frame = report.frame()
    assert list(frame.columns) == COMPARISON_COLUMNS
    assert frame["model"].tolist() == ["branch_0", "branch_1", "supernet", "majority_vote", "softmax_vote"]
    assert np.isnan(frame["loss"].iloc[-1])


def test_ensemble_size_sweep(blob_splits, trained_branches, fast_config):
    """One row per ensemble size, built from the first k branches."""
    train_set, val_set, test_set = blob_splits
    frame = ensemble_size_sweep(trained_branches, train_set, val_set, test_set, fast_config, epochs=1)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame["k"].tolist() == [1, 2]
    assert frame["best_branch_acc"].between(0.0, 1.0).all()


def test_ensemble_size_sweep_rejects_size():
    with pytest.raises(ConfigurationError):
        ensemble_size_sweep([], None, None, None, None, sizes=[1])
