"""SimLoss and its gradients.

For a batch of probability rows ``p_i``, targets ``y_i`` and a similarity
matrix ``S``::

    simloss = -(1/N) * sum_i log(sum_c S[y_i, c] * p_i[c])

With ``S = I`` this is categorical cross entropy. The inner weighted sum is
clamped below at ``EPS`` before the log; rows that hit the clamp contribute a
constant and therefore a zero gradient.
"""

import numpy as np

from .errors import InvalidInputError, ShapeError
from .sim_matrix import row_normalize

EPS = 1e-12


def _as_matrix(S):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"similarity matrix must be square, got {S.shape}")
    return S


def _as_labels(labels, class_count):
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.round(y)):
            raise InvalidInputError("labels must be integers")
        y = y.astype(np.int64)
    if np.any(y < 0) or np.any(y >= class_count):
        raise InvalidInputError(f"labels must lie in [0, {class_count})")
    return y.astype(np.int64, copy=False)


def _check(probs, labels, S):
    S = _as_matrix(S)
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeError(f"probabilities must be (N, C), got {p.shape}")
    if p.shape[1] != S.shape[0]:
        raise ShapeError(f"{p.shape[1]} probability columns but {S.shape[0]} classes in S")
    y = _as_labels(labels, S.shape[0])
    if y.shape[0] != p.shape[0]:
        raise ShapeError(f"{p.shape[0]} rows but {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise ShapeError("empty batch")
    return p, y, S


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite")
    squeeze = z.ndim == 1
    z = np.atleast_2d(z)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if squeeze else p


def _weighted(p, y, S):
    rows = S[y]
    return rows, np.einsum("nc,nc->n", rows, p)


def simloss(probs, labels, S):
    p, y, S = _check(probs, labels, S)
    _, w = _weighted(p, y, S)
    return float(-np.mean(np.log(np.maximum(w, EPS))))


def simloss_grad_probs(probs, labels, S):
    """d simloss / d p, including the 1/N batch factor."""
    p, y, S = _check(probs, labels, S)
    rows, w = _weighted(p, y, S)
    live = w >= EPS
    scale = np.where(live, 1.0 / np.maximum(w, EPS), 0.0) / p.shape[0]
    return -rows * scale[:, None]


def grad_logits_from_probs(p, y, S):
    # p_k * (1 - S[y, k] / w), zero for rows in the clamped region.
    rows, w = _weighted(p, y, S)
    live = w >= EPS
    ratio = rows / np.maximum(w, EPS)[:, None]
    grad = p * (1.0 - ratio)
    grad[~live] = 0.0
    return grad / p.shape[0]


def simloss_grad_logits(logits, labels, S):
    """d simloss(softmax(z)) / d z, including the 1/N batch factor.

    Reduces to ``(softmax(z) - onehot(y)) / N`` when ``S`` is the identity.
    """
    z = np.asarray(logits, dtype=np.float64)
    p = softmax(z)
    p, y, S = _check(p, labels, S)
    return grad_logits_from_probs(p, y, S)


def prob_loss(probs, labels, S):
    """SimLoss evaluated with the row-normalised matrix."""
    p, y, S = _check(probs, labels, S)
    return simloss(p, y, row_normalize(S))


def loss_gap(labels, S):
    """``prob_loss - simloss``: the mean log row-sum of S over the targets.

    Does not depend on the probabilities, which is why both losses share the
    same gradient.
    """
    S = _as_matrix(S)
    y = _as_labels(labels, S.shape[0])
    if y.size == 0:
        raise ShapeError("empty batch")
    return float(np.mean(np.log(S[y].sum(axis=1))))
