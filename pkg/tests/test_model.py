import math

import numpy as np
import pytest

from oracles import adam_scalar, central_difference, mlp_forward_scalar, simloss_scalar, softmax_scalar
from simloss.errors import DataError, InvalidParameterError, ShapeError
from simloss.model import (
    AdamState,
    DenseNet,
    TrainConfig,
    adam_step,
    backward,
    evaluate,
    forward,
    init_network,
    train,
)
from simloss.sim_matrix import order_matrix


def test_init_shapes_and_determinism():
    net = init_network([4, 3], seed=0)
    assert net.weights[0].shape == (3, 4) and net.biases[0].shape == (3,)
    assert np.all(net.biases[0] == 0)
    assert np.all(np.abs(net.weights[0]) <= 1 / math.sqrt(4))
    assert init_network([4, 5, 3], 7).equals(init_network([4, 5, 3], 7))
    assert not init_network([4, 5, 3], 7).equals(init_network([4, 5, 3], 8))


@pytest.mark.parametrize("sizes", [[4], [4, 0, 3], [2.5, 3]])
def test_init_rejects_bad_sizes(sizes):
    with pytest.raises(InvalidParameterError):
        init_network(sizes, 0)


def test_forward_special_cases():
    zero = DenseNet((3, 4, 2), [np.zeros((4, 3)), np.zeros((2, 4))], [np.zeros(4), np.zeros(2)])
    np.testing.assert_array_equal(forward(zero, np.ones((5, 3))), np.zeros((5, 2)))
    W = np.array([[1.0, -2.0], [0.5, 3.0], [0.0, 1.0]])
    b = np.array([0.1, 0.2, -0.3])
    lin = DenseNet((2, 3), [W], [b])
    x = np.array([[2.0, -1.0]])
    np.testing.assert_allclose(forward(lin, x), [[4.1, -1.8, -1.3]], atol=1e-15)
    with pytest.raises(ShapeError):
        forward(lin, np.ones((1, 3)))


def test_forward_matches_loop_oracle():
    rng = np.random.default_rng(1)
    net = init_network([5, 7, 6, 4], 3)
    X = rng.normal(size=(8, 5))
    out = forward(net, X)
    for x, row in zip(X, out):
        ref = mlp_forward_scalar([W.tolist() for W in net.weights], [b.tolist() for b in net.biases], x.tolist())
        np.testing.assert_allclose(row, ref, rtol=1e-12, atol=1e-14)


def _net_loss(net, X, y, S):
    total = 0.0
    probs = [softmax_scalar(mlp_forward_scalar(net.weights, net.biases, x)) for x in X]
    total = simloss_scalar(probs, y, S)
    return total


def _fd_grads(net, X, y, S):
    grads = []
    for k in range(len(net.weights)):
        for attr in ("weights", "biases"):
            def f(v, k=k, attr=attr):
                trial = net.copy()
                getattr(trial, attr)[k] = v
                return _net_loss(trial, X, y, S)
            grads.append((attr, k, central_difference(f, getattr(net, attr)[k])))
    return grads


@pytest.mark.parametrize("seed", range(5))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = init_network([3, 4, 3], seed)
    for b in net.biases:
        b += rng.normal(scale=0.1, size=b.shape)
    X = rng.normal(size=(6, 3))
    y = rng.integers(0, 3, size=6)
    S = rng.uniform(size=(3, 3))
    np.fill_diagonal(S, 1.0)
    g = backward(net, X, y, S)
    for attr, k, fd in _fd_grads(net, X, y, S):
        an = getattr(g, attr)[k]
        assert np.all(np.abs(an - fd) <= np.maximum(1e-4 * np.abs(fd), 1e-8)), (attr, k)


def test_backward_identity_and_all_ones():
    rng = np.random.default_rng(0)
    net = init_network([3, 2], 0)
    X = rng.normal(size=(4, 3))
    y = np.array([0, 1, 1, 0])
    g = backward(net, X, y, np.eye(2))
    z = forward(net, X)
    p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    delta = (p - np.eye(2)[y]) / 4
    np.testing.assert_allclose(g.weights[0], delta.T @ X, atol=1e-15)
    np.testing.assert_allclose(g.biases[0], delta.sum(axis=0), atol=1e-15)
    g1 = backward(init_network([3, 4, 2], 1), X, y, np.ones((2, 2)))
    for p_ in g1.params():
        assert np.all(np.abs(p_) <= 1e-16)


def test_adam_zero_gradient():
    net = init_network([2, 2], 0)
    zero = DenseNet(net.layer_sizes, [np.zeros((2, 2))], [np.zeros(2)])
    new, state = adam_step(net, zero, AdamState.zeros_like(net))
    assert new.equals(net)
    assert state.step_count == 1


def test_adam_first_step_is_sign_step():
    net = DenseNet((1, 1), [np.array([[0.5]])], [np.array([0.0])])
    g = DenseNet((1, 1), [np.array([[3.0]])], [np.array([-0.02])])
    new, _ = adam_step(net, g, AdamState.zeros_like(net), 0.001)
    # bias-corrected first step: -lr * g / (|g| + eps)
    assert new.weights[0][0, 0] == pytest.approx(0.5 - 0.001 * 3.0 / (3.0 + 1e-8), abs=1e-15)
    assert new.biases[0][0] == pytest.approx(0.001 * 0.02 / (0.02 + 1e-8), abs=1e-15)


def test_adam_matches_scalar_sequence():
    grads = [0.3, 0.3, -1.2, 0.05]
    expected = adam_scalar(0.5, grads, lr=0.01)
    net = DenseNet((1, 1), [np.array([[0.5]])], [np.array([0.0])])
    state = AdamState.zeros_like(net)
    for g, want in zip(grads, expected):
        gnet = DenseNet((1, 1), [np.array([[g]])], [np.array([0.0])])
        net, state = adam_step(net, gnet, state, 0.01)
        assert net.weights[0][0, 0] == pytest.approx(want, abs=1e-15)
    assert state.step_count == 4
    assert all(np.all(v >= 0) for v in state.second_moment)


def test_adam_shape_mismatch():
    net = init_network([2, 2], 0)
    bad = init_network([3, 2], 0)
    with pytest.raises(ShapeError):
        adam_step(net, bad, AdamState.zeros_like(net))


def test_train_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(patience=5, max_epochs=3)
    with pytest.raises(InvalidParameterError):
        TrainConfig(early_stop_metric="loss")
    with pytest.raises(InvalidParameterError):
        TrainConfig(batch_size=0)


def _separable(seed=0, n=100):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    X[:, 0] += np.where(np.arange(n) % 2 == 0, 2.0, -2.0)
    y = (X[:, 0] > 0).astype(int)
    return X, y


def test_train_patience_contract():
    X, y = _separable()
    # zero learning signal: every epoch has the same validation metric
    cfg = TrainConfig(patience=1, max_epochs=20, early_stop_metric="accuracy", seed=0)
    net, hist = train(((X, y), (X, y)), np.ones((2, 2)), [2, 2], cfg)
    assert hist.epochs == 2
    assert hist.val_accuracy[0] == hist.val_accuracy[1]
    cfg1 = TrainConfig(patience=1, max_epochs=1, seed=0)
    _, hist1 = train(((X, y), (X, y)), np.eye(2), [2, 2], cfg1)
    assert hist1.epochs == 1


def test_train_separable_reaches_full_accuracy():
    X, y = _separable(1)
    cfg = TrainConfig(learning_rate=0.01, batch_size=16, patience=50, max_epochs=50, early_stop_metric="accuracy", seed=3)
    net, hist = train(((X, y), (X, y)), np.eye(2), [2, 8, 2], cfg)
    acc, _ = evaluate(net, X, y)
    assert acc == 1.0


def test_train_determinism_and_best_restore():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(120, 3))
    y = np.clip((X[:, 0] * 2 + 3).astype(int), 0, 5)
    Xv = rng.normal(size=(40, 3))
    yv = np.clip((Xv[:, 0] * 2 + 3).astype(int), 0, 5)
    cfg = TrainConfig(batch_size=32, patience=3, max_epochs=30, seed=11)
    S = order_matrix(6, 0.5)
    a, ha = train(((X, y), (Xv, yv)), S, [3, 8, 6], cfg)
    b, hb = train(((X, y), (Xv, yv)), S, [3, 8, 6], cfg)
    assert a.equals(b)
    assert ha == hb
    _, mae = evaluate(a, Xv, yv)
    assert mae == min(ha.val_mae)
    assert ha.val_mae[ha.best_epoch] == mae


def test_train_errors():
    X, y = _separable()
    with pytest.raises(DataError):
        train(((X, y), (X[:0], y[:0])), np.eye(2), [2, 2], TrainConfig())
    with pytest.raises(ShapeError):
        train(((X, y), (X, y)), np.eye(3), [2, 2], TrainConfig())
