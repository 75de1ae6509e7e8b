"""Evaluation metrics, the paired signed-rank test and output-distribution summaries."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NoTestPossibleError, ShapeError
from .model import forward
from .loss import softmax

EXACT_MAX_N = 20


def _pair(predictions, targets):
    pred = np.asarray(predictions)
    tgt = np.asarray(targets)
    if pred.ndim != 1 or tgt.ndim != 1:
        raise ShapeError("predictions and targets must be 1-D")
    if pred.shape != tgt.shape:
        raise ShapeError(f"{pred.size} predictions but {tgt.size} targets")
    if pred.size == 0:
        raise DataError("metrics need at least one example")
    return pred, tgt


def predict(probs_or_logits):
    """Argmax class per row; ties go to the lowest class index."""
    return np.argmax(np.asarray(probs_or_logits), axis=1)


def accuracy(predictions, targets):
    pred, tgt = _pair(predictions, targets)
    return float(np.mean(pred == tgt))


def mae(predictions, targets):
    pred, tgt = _pair(predictions, targets)
    return float(np.mean(np.abs(pred.astype(np.float64) - tgt)))


def mse(predictions, targets):
    pred, tgt = _pair(predictions, targets)
    d = pred.astype(np.float64) - tgt
    return float(np.mean(d * d))


def _superclasses(mapping, *arrays):
    m = np.asarray(mapping)
    for a in arrays:
        if np.any(a < 0) or np.any(a >= m.size):
            raise DataError("class index outside the superclass map")
    return [m[a] for a in arrays]


def superclass_accuracy(predictions, targets, superclasses):
    """Fraction of examples whose predicted class shares the target's superclass.

    ``superclasses`` maps class index to superclass index (a sequence, array
    or dict over ``range(C)``).
    """
    pred, tgt = _pair(predictions, targets)
    sp, st = _superclasses(_map_array(superclasses), pred, tgt)
    return float(np.mean(sp == st))


def failed_superclass_accuracy(predictions, targets, superclasses):
    """Superclass accuracy over misclassified examples only.

    Returns ``None`` when nothing was misclassified, since the metric is
    undefined there.
    """
    pred, tgt = _pair(predictions, targets)
    wrong = pred != tgt
    if not wrong.any():
        return None
    sp, st = _superclasses(_map_array(superclasses), pred[wrong], tgt[wrong])
    return float(np.mean(sp == st))


def _map_array(superclasses):
    if isinstance(superclasses, dict):
        n = len(superclasses)
        if set(superclasses) != set(range(n)):
            raise DataError("superclass map must cover classes 0..C-1")
        return np.array([superclasses[c] for c in range(n)])
    return np.asarray(superclasses)


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    significant: bool
    direction: str  # "a_better", "b_better" or "none"
    statistic: float  # sum of ranks of positive differences a - b
    n: int  # pairs left after dropping zero differences
    exact: bool


def signed_ranks(differences):
    """Average ranks of ``|d|`` (1-based), ties sharing the mean rank."""
    d = np.abs(np.asarray(differences, dtype=np.float64))
    order = np.argsort(d, kind="mergesort")
    ranks = np.empty(d.size)
    sorted_d = d[order]
    i = 0
    while i < d.size:
        j = i
        while j + 1 < d.size and sorted_d[j + 1] == sorted_d[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _exact_two_sided(doubled_ranks, doubled_stat):
    # Null distribution of the doubled positive-rank sum: every sign pattern
    # is equally likely, so count patterns per sum with a subset-sum table.
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    n_patterns = 2 ** len(doubled_ranks)
    lower = int(sum(counts[: doubled_stat + 1]))
    upper = int(sum(counts[doubled_stat:]))
    return min(1.0, 2.0 * min(lower, upper) / n_patterns)


def wilcoxon_signed_rank(a, b, alpha=0.05, higher_is_better=True):
    """Two-sided Wilcoxon signed-rank test on paired samples ``a`` and ``b``.

    Zero differences are dropped and tied magnitudes get average ranks. For
    up to 20 remaining pairs the p-value comes from the exact null
    distribution over all 2^n sign assignments; beyond that a normal
    approximation with tie correction is used.

    ``direction`` reports which sample is better on average, where better
    means larger unless ``higher_is_better`` is False.

    Raises NoTestPossibleError when every difference is zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeError("paired samples must be 1-D and of equal length")
    if a.size == 0:
        raise DataError("paired samples must be non-empty")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise NoTestPossibleError("all paired differences are zero")
    ranks = signed_ranks(d)
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        p = _exact_two_sided(doubled, int(np.rint(2.0 * w_plus)))
        exact = True
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
        z = (w_plus - mean) / math.sqrt(var)
        p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
        exact = False
    mean_diff = float(np.mean(a - b))
    if mean_diff == 0.0:
        direction = "none"
    elif (mean_diff > 0) == higher_is_better:
        direction = "a_better"
    else:
        direction = "b_better"
    return WilcoxonResult(p, p < alpha, direction, w_plus, n, exact)


def mean_output_distribution(model, features, targets=None, target_filter=None):
    """Average softmax output over all examples, or over one target class."""
    X = np.asarray(features, dtype=np.float64)
    if target_filter is not None:
        if targets is None:
            raise DataError("target_filter needs targets")
        X = X[np.asarray(targets) == target_filter]
    if X.shape[0] == 0:
        raise DataError("no examples selected")
    return softmax(forward(model, X)).mean(axis=0)


def representative_class_count(distribution, threshold=0.01):
    """Number of strict local maxima above ``threshold``.

    An interior entry counts if it beats both neighbours, a boundary entry if
    it beats its single neighbour.
    """
    p = np.asarray(distribution, dtype=np.float64)
    if p.size == 0:
        return 0
    if p.size == 1:
        return int(p[0] > threshold)
    left = np.concatenate(([-np.inf], p[:-1]))
    right = np.concatenate((p[1:], [-np.inf]))
    peaks = (p > left) & (p > right) & (p > threshold)
    return int(peaks.sum())
