"""A small ReLU MLP with a softmax output, trained with Adam on SimLoss."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvalidParameterError, ShapeError
from .loss import _as_labels, _as_matrix, grad_logits_from_probs, simloss, softmax
from .rng import make_rng

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class DenseNet:
    layer_sizes: tuple
    weights: list
    biases: list

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("need one weight matrix and one bias per layer")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if W.shape != want or b.shape != (want[0],):
                raise ShapeError(f"layer {k}: weight {W.shape}, bias {b.shape}, expected {want}")

    @property
    def class_count(self):
        return self.layer_sizes[-1]

    def params(self):
        return [*self.weights, *self.biases]

    def copy(self):
        return DenseNet(self.layer_sizes, [W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def parameter_count(self):
        return sum(p.size for p in self.params())

    def equals(self, other):
        return self.layer_sizes == other.layer_sizes and all(
            np.array_equal(a, b) for a, b in zip(self.params(), other.params())
        )


@dataclass
class AdamState:
    first_moment: list
    second_moment: list
    step_count: int = 0

    @classmethod
    def zeros_like(cls, net):
        return cls([np.zeros_like(p) for p in net.params()], [np.zeros_like(p) for p in net.params()], 0)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 128
    patience: int = 10
    max_epochs: int = 100
    early_stop_metric: str = "mae"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidParameterError("learning_rate must be positive")
        if self.batch_size < 1:
            raise InvalidParameterError("batch_size must be >= 1")
        if self.patience < 1 or self.max_epochs < 1:
            raise InvalidParameterError("patience and max_epochs must be >= 1")
        if self.patience > self.max_epochs:
            raise InvalidParameterError("patience must not exceed max_epochs")
        if self.early_stop_metric not in ("mae", "accuracy"):
            raise InvalidParameterError(
                f"early_stop_metric must be 'mae' or 'accuracy', got {self.early_stop_metric!r}"
            )
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_mae: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1

    @property
    def epochs(self):
        return len(self.train_loss)

    def metric(self, name):
        return self.val_mae if name == "mae" else self.val_accuracy


def init_network(layer_sizes, seed):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    sizes = tuple(layer_sizes)
    if len(sizes) < 2 or any(int(s) != s or s < 1 for s in sizes):
        raise InvalidParameterError(f"layer sizes must be >= 2 positive integers, got {sizes}")
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNet(sizes, weights, biases)


def _features(net, features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.layer_sizes[0]:
        raise ShapeError(f"features must be (N, {net.layer_sizes[0]}), got {X.shape}")
    return X


def _forward_cache(net, X):
    acts = [X]
    h = X
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ W.T + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def forward(net, features):
    """Logits of shape (N, C)."""
    return _forward_cache(net, _features(net, features))[-1]


def predict_proba(net, features):
    return softmax(forward(net, features))


def _backprop(net, acts, delta):
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for k in range(len(net.weights) - 1, -1, -1):
        grads_w[k] = delta.T @ acts[k]
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k]) * (acts[k] > 0.0)
    return DenseNet(net.layer_sizes, grads_w, grads_b)


def loss_and_grads(net, features, labels, S):
    X = _features(net, features)
    S = _as_matrix(S)
    if S.shape[0] != net.class_count:
        raise ShapeError(f"network has {net.class_count} outputs but S has {S.shape[0]} classes")
    y = _as_labels(labels, S.shape[0])
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} examples but {y.shape[0]} labels")
    acts = _forward_cache(net, X)
    p = softmax(acts[-1])
    delta = grad_logits_from_probs(p, y, S)
    return simloss(p, y, S), _backprop(net, acts, delta)


def backward(net, features, labels, S):
    """Gradients of ``simloss(softmax(forward(net, x)), labels, S)``.

    Returned as a DenseNet whose weights and biases hold the gradients.
    """
    return loss_and_grads(net, features, labels, S)[1]


def adam_step(net, grads, state, learning_rate=0.001):
    """One bias-corrected Adam update. Returns new ``(net, state)``."""
    params, gparams = net.params(), grads.params()
    if len(params) != len(gparams) or any(p.shape != g.shape for p, g in zip(params, gparams)):
        raise ShapeError("gradient shapes do not match the network")
    if len(state.first_moment) != len(params) or any(
        m.shape != p.shape for m, p in zip(state.first_moment, params)
    ):
        raise ShapeError("optimizer state does not match the network")
    t = state.step_count + 1
    c1 = 1.0 - BETA1**t
    c2 = 1.0 - BETA2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, gparams, state.first_moment, state.second_moment):
        m = BETA1 * m + (1.0 - BETA1) * g
        v = BETA2 * v + (1.0 - BETA2) * (g * g)
        step = learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        new_params.append(p - step)
        new_m.append(m)
        new_v.append(v)
    n = len(net.weights)
    new_net = DenseNet(net.layer_sizes, new_params[:n], new_params[n:])
    return new_net, AdamState(new_m, new_v, t)


def evaluate(net, features, labels):
    """Validation accuracy and MAE of argmax predictions."""
    pred = np.argmax(forward(net, features), axis=1)
    y = np.asarray(labels)
    return float(np.mean(pred == y)), float(np.mean(np.abs(pred - y)))


def _improved(metric, value, best):
    if best is None:
        return True
    return value < best if metric == "mae" else value > best


def train(splits, S, layer_sizes, config):
    """Train with mini-batch Adam and patience-based early stopping.

    ``splits`` is ``(train, validation)`` or ``(train, validation, test)``;
    each item is a Dataset (``features``/``labels``) or an ``(X, y)`` pair.
    Returns the network from the best validation epoch and the history.
    """
    train_set, val_set = splits[0], splits[1]
    X, y = _xy(train_set)
    Xv, yv = _xy(val_set)
    if len(y) == 0 or len(yv) == 0:
        raise DataError("training and validation splits must be non-empty")
    if X.shape[1] != Xv.shape[1]:
        raise ShapeError("train and validation feature widths differ")
    S = _as_matrix(S)
    sizes = tuple(layer_sizes)
    if sizes[0] != X.shape[1] or sizes[-1] != S.shape[0]:
        raise ShapeError(f"layer sizes {sizes} do not fit features {X.shape[1]} / classes {S.shape[0]}")
    y = _as_labels(y, S.shape[0])
    yv = _as_labels(yv, S.shape[0])

    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    net = init_network(sizes, np.random.Generator(np.random.PCG64(init_seq)))
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_seq))
    state = AdamState.zeros_like(net)

    history = TrainHistory()
    best, best_net, stale = None, net.copy(), 0
    n = len(y)
    for epoch in range(config.max_epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(net, X[idx], y[idx], S)
            net, state = adam_step(net, grads, state, config.learning_rate)
            total += loss * len(idx)
        history.train_loss.append(total / n)
        acc, mae = evaluate(net, Xv, yv)
        history.val_accuracy.append(acc)
        history.val_mae.append(mae)
        value = mae if config.early_stop_metric == "mae" else acc
        if _improved(config.early_stop_metric, value, best):
            best, best_net, stale = value, net.copy(), 0
            history.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best_net, history


def _xy(split):
    if hasattr(split, "features"):
        return np.asarray(split.features, dtype=np.float64), np.asarray(split.labels)
    X, y = split
    return np.asarray(X, dtype=np.float64), np.asarray(y)
