"""Class-similarity matrices.

A similarity matrix ``S`` is a dense ``C x C`` float64 array with entries in
``[0, 1]`` and ones on the diagonal. ``S[i, j]`` says how acceptable it is to
put probability mass on class ``j`` when the target is class ``i``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidMatrixError, InvalidParameterError


class SimilarityMatrix:
    """Immutable, validated similarity matrix.

    Behaves like a read-only ndarray through ``__array__`` so it can be
    passed anywhere a plain matrix is accepted.
    """

    __slots__ = ("_values",)

    def __init__(self, values):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidMatrixError(f"similarity matrix must be square, got shape {values.shape}")
        if values.shape[0] < 2:
            raise InvalidDimensionError("similarity matrix needs at least 2 classes")
        if not np.all(np.isfinite(values)):
            raise InvalidMatrixError("similarity matrix has non-finite entries")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise InvalidMatrixError("similarity matrix entries must lie in [0, 1]")
        if not np.all(np.diag(values) == 1.0):
            raise InvalidMatrixError("similarity matrix must have a unit diagonal")
        values.setflags(write=False)
        self._values = values

    @property
    def values(self):
        return self._values

    @property
    def class_count(self):
        return self._values.shape[0]

    @property
    def shape(self):
        return self._values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None or np.dtype(dtype) == self._values.dtype:
            return self._values.copy() if copy else self._values
        return self._values.astype(dtype)

    def __getitem__(self, key):
        return self._values[key]

    def __eq__(self, other):
        if isinstance(other, SimilarityMatrix):
            return np.array_equal(self._values, other._values)
        return NotImplemented

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        return f"SimilarityMatrix(class_count={self.class_count})"


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Class names with one embedding vector each."""

    names: tuple
    vectors: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        vectors = np.array(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise InvalidDimensionError("embedding vectors must form an (n, d) array with d >= 1")
        if vectors.shape[0] != len(names):
            raise InvalidDimensionError(
                f"{len(names)} names but {vectors.shape[0]} vectors"
            )
        if len(set(names)) != len(names):
            raise InvalidParameterError("class names must be unique")
        if not np.all(np.isfinite(vectors)):
            raise InvalidParameterError("embedding vectors must be finite")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms <= 0.0):
            bad = [names[i] for i in np.flatnonzero(norms <= 0.0)]
            raise InvalidParameterError(f"zero-norm embedding for {bad}")
        vectors.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "vectors", vectors)

    def __len__(self):
        return len(self.names)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def index(self, name):
        return self.names.index(name)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.vectors, other.vectors)

    def subset(self, names):
        rows = [self.index(n) for n in names]
        return EmbeddingTable(tuple(names), self.vectors[rows])


def _check_class_count(class_count):
    if int(class_count) != class_count or class_count < 2:
        raise InvalidDimensionError(f"class_count must be an integer >= 2, got {class_count}")
    return int(class_count)


def _check_unit_interval(name, value):
    if not (0.0 <= value < 1.0):
        raise InvalidParameterError(f"{name} must lie in [0, 1), got {value}")
    return float(value)


def identity_matrix(class_count):
    """Similarity matrix under which SimLoss is plain cross entropy."""
    return SimilarityMatrix(np.eye(_check_class_count(class_count)))


def order_matrix(class_count, reduction_factor):
    """Similarity ``r ** |i - j|`` for ordinally arranged classes.

    ``reduction_factor == 0`` gives the identity; the ``0 ** 0 == 1`` case is
    handled explicitly rather than trusting the power routine.
    """
    c = _check_class_count(class_count)
    r = _check_unit_interval("reduction_factor", reduction_factor)
    if r == 0.0:
        return identity_matrix(c)
    idx = np.arange(c)
    dist = np.abs(idx[:, None] - idx[None, :])
    values = r ** dist.astype(np.float64)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values)


def cosine_similarity_clamped(table, i, j):
    """``max(0, cos(w_i, w_j))``; exactly 1 when ``i == j``."""
    n = len(table)
    for k in (i, j):
        if not (-n <= k < n) or int(k) != k:
            raise IndexError(f"class index {k} out of range for {n} classes")
    i, j = int(i) % n, int(j) % n
    if i == j:
        return 1.0
    a, b = table.vectors[i], table.vectors[j]
    cos = float(a @ b) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return min(1.0, max(0.0, cos))


def cosine_matrix(table):
    """All pairwise clamped cosine similarities of an embedding table.

    Vectorised counterpart of :func:`cosine_similarity_clamped`; the result has
    a unit diagonal and entries clamped into ``[0, 1]``.
    """
    unit = table.vectors / np.linalg.norm(table.vectors, axis=1, keepdims=True)
    sim = unit @ unit.T
    sim = np.clip(sim, 0.0, 1.0)
    sim = 0.5 * (sim + sim.T)
    np.fill_diagonal(sim, 1.0)
    return sim


def lower_bound_matrix(raw_sim, lower_bound):
    """Cut similarities below ``lower_bound`` and rescale the rest to [0, 1].

    ``S[i, j] = max(0, sim(i, j) - l) / (1 - l)``. The diagonal stays exactly 1.
    """
    raw = np.asarray(raw_sim, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise InvalidMatrixError(f"raw similarity matrix must be square, got {raw.shape}")
    _check_class_count(raw.shape[0])
    if not np.all(np.diag(raw) == 1.0):
        raise InvalidMatrixError("raw similarity matrix must have a unit diagonal")
    if np.any(raw < 0.0) or np.any(raw > 1.0) or not np.all(np.isfinite(raw)):
        raise InvalidMatrixError("raw similarities must lie in [0, 1]")
    l = _check_unit_interval("lower_bound", lower_bound)
    if l == 0.0:
        values = raw.copy()
    else:
        values = np.maximum(0.0, raw - l) / (1.0 - l)
    values = np.clip(values, 0.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values)


def row_normalize(matrix):
    """Divide every row by its sum, turning similarities into probabilities."""
    values = np.asarray(matrix, dtype=np.float64)
    return values / values.sum(axis=1, keepdims=True)


def max_off_diagonal(matrix):
    values = np.asarray(matrix, dtype=np.float64)
    mask = ~np.eye(values.shape[0], dtype=bool)
    return float(values[mask].max())
