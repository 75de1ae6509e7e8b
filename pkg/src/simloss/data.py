"""Synthetic task generators, file loaders and dataset splitting."""

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, InvalidParameterError, ParseError
from .rng import gaussian, make_rng
from .sim_matrix import EmbeddingTable


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    superclasses: np.ndarray = None
    class_names: tuple = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"features {X.shape} and labels {y.shape} do not line up")
        if y.size == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        C = int(self.class_count)
        if np.any(y < 0) or np.any(y >= C):
            raise DataError(f"labels must lie in [0, {C})")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_count", C)
        if self.superclasses is not None:
            sc = np.array(self.superclasses, dtype=np.int64)
            if sc.shape != (C,):
                raise DataError(f"superclass map must have one entry per class ({C})")
            sc.setflags(write=False)
            object.__setattr__(self, "superclasses", sc)
        if self.class_names is not None:
            names = tuple(str(n) for n in self.class_names)
            if len(names) != C:
                raise DataError(f"{len(names)} class names for {C} classes")
            object.__setattr__(self, "class_names", names)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def take(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and _opt_equal(self.superclasses, other.superclasses)
            and self.class_names == other.class_names
        )


def _opt_equal(a, b):
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fr):
            raise InvalidParameterError("every split fraction must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise InvalidParameterError(f"split fractions must sum to 1, got {sum(fr)}")


def _class_sizes(class_count, per_class, class_ratio):
    if class_ratio is None:
        return [per_class] * class_count
    if not class_ratio > 0:
        raise InvalidParameterError("class_ratio must be positive")
    return [max(1, int(round(per_class * class_ratio**c))) for c in range(class_count)]


def ordinal_features(labels, class_count, g1, g2, g3):
    c = np.asarray(labels, dtype=np.float64)
    angle = 2.0 * np.pi / class_count
    return np.column_stack([(c + g1) / class_count, np.sin(angle * (c + g2)), np.cos(angle * (c + g3))])


def synth_ordinal(class_count, per_class, noise_sigma, seed, class_ratio=None):
    """Ordered classes embedded on a line and a circle, plus Gaussian jitter.

    Class ``c`` draws ``[(c+g1)/C, sin(2pi(c+g2)/C), cos(2pi(c+g3)/C)]`` with
    ``g1, g2, g3 ~ N(0, noise_sigma^2)``. With ``class_ratio`` set, class ``c``
    gets ``round(per_class * class_ratio**c)`` examples (at least one) instead
    of a balanced ``per_class``.
    """
    if int(class_count) != class_count or class_count < 2:
        raise InvalidParameterError("class_count must be an integer >= 2")
    if int(per_class) != per_class or per_class < 1:
        raise InvalidParameterError("per_class must be an integer >= 1")
    if not noise_sigma > 0:
        raise InvalidParameterError("noise_sigma must be positive")
    C = int(class_count)
    sizes = _class_sizes(C, int(per_class), class_ratio)
    labels = np.repeat(np.arange(C), sizes)
    rng = make_rng(seed)
    g = gaussian(rng, (labels.size, 3), noise_sigma)
    X = ordinal_features(labels, C, g[:, 0], g[:, 1], g[:, 2])
    return Dataset(X, labels, C, class_names=tuple(str(c) for c in range(C)))


def synth_grouped(group_count, classes_per_group, per_class, embed_dim, within_sigma, feature_sigma, seed):
    """Classes clustered into groups, with class-name-like embeddings.

    Each group has a random unit centroid; each class embedding is the
    normalised centroid plus N(0, within_sigma^2) jitter; each example is its
    class embedding plus N(0, feature_sigma^2) noise. Returns the dataset
    (superclass = group) and the embedding table.
    """
    for name, v in (("group_count", group_count), ("classes_per_group", classes_per_group)):
        if int(v) != v or v < 2:
            raise InvalidParameterError(f"{name} must be an integer >= 2")
    if int(per_class) != per_class or per_class < 1:
        raise InvalidParameterError("per_class must be an integer >= 1")
    if int(embed_dim) != embed_dim or embed_dim < 1:
        raise InvalidParameterError("embed_dim must be an integer >= 1")
    if within_sigma < 0 or feature_sigma < 0:
        raise InvalidParameterError("noise levels must be non-negative")
    G, K, m, d = int(group_count), int(classes_per_group), int(per_class), int(embed_dim)
    rng = make_rng(seed)
    centroids = gaussian(rng, (G, d))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    jitter = gaussian(rng, (G * K, d), within_sigma) if within_sigma > 0 else np.zeros((G * K, d))
    emb = np.repeat(centroids, K, axis=0) + jitter
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    C = G * K
    labels = np.repeat(np.arange(C), m)
    noise = gaussian(rng, (labels.size, d), feature_sigma) if feature_sigma > 0 else 0.0
    X = emb[labels] + noise
    names = tuple(f"g{c // K}c{c % K}" for c in range(C))
    superclasses = np.arange(C) // K
    return Dataset(X, labels, C, superclasses, names), EmbeddingTable(names, emb)


def split(dataset, spec=SplitSpec()):
    """Seeded random train/validation/test partition.

    Train and validation sizes are floored; the remainder goes to test.
    """
    n = len(dataset)
    n_train = int(np.floor(n * spec.train_fraction))
    n_val = int(np.floor(n * spec.val_fraction))
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise DataError(f"{n} examples are too few for a non-empty {spec} split")
    perm = make_rng(spec.seed).permutation(n)
    return (
        dataset.take(perm[:n_train]),
        dataset.take(perm[n_train:n_train + n_val]),
        dataset.take(perm[n_train + n_val:]),
    )


def standardize(train_set, *others):
    """Per-feature zero mean / unit variance from the training split."""
    mean = train_set.features.mean(axis=0)
    std = train_set.features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    out = [replace(ds, features=(ds.features - mean) / std) for ds in (train_set, *others)]
    return tuple(out)


# --- files -----------------------------------------------------------------


def _read_lines(path):
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return [line.rstrip("\r") for line in text.split("\n")]


def save_csv(dataset, path):
    header = [f"f{k}" for k in range(dataset.dim)] + ["label"]
    if dataset.superclasses is not None:
        header.append("superclass")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for x, y in zip(dataset.features, dataset.labels):
        row = [repr(float(v)) for v in x] + [int(y)]
        if dataset.superclasses is not None:
            row.append(int(dataset.superclasses[y]))
        writer.writerow(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def load_csv(path, class_count=None):
    """Read ``f0..f{d-1},label[,superclass]`` columns into a Dataset.

    ``class_count`` defaults to ``max(label) + 1``.
    """
    lines = _read_lines(path)
    rows = list(csv.reader(lines))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r]
    if not numbered:
        raise ParseError("empty file", path=path)
    _, header = numbered[0]
    header = [h.strip() for h in header]
    if "label" not in header:
        raise ParseError("missing 'label' column", line=1, path=path)
    feat_cols = sorted(
        (int(h[1:]), k) for k, h in enumerate(header) if h.startswith("f") and h[1:].isdigit()
    )
    if [c for c, _ in feat_cols] != list(range(len(feat_cols))) or not feat_cols:
        raise ParseError("feature columns must be f0..f{d-1}", line=1, path=path)
    label_col = header.index("label")
    super_col = header.index("superclass") if "superclass" in header else None

    X, y, sup = [], [], []
    for lineno, row in numbered[1:]:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno, path=path)
        try:
            X.append([float(row[k]) for _, k in feat_cols])
        except ValueError as exc:
            raise ParseError(f"bad feature value: {exc}", line=lineno, path=path) from None
        y.append(_parse_int(row[label_col], "label", lineno, path))
        if super_col is not None:
            sup.append(_parse_int(row[super_col], "superclass", lineno, path))
    if not y:
        raise ParseError("no data rows", path=path)
    labels = np.array(y, dtype=np.int64)
    C = int(labels.max()) + 1 if class_count is None else int(class_count)
    superclasses = None
    if super_col is not None:
        mapping = {}
        for lab, s in zip(y, sup):
            if mapping.setdefault(lab, s) != s:
                raise ParseError(f"class {lab} has more than one superclass", path=path)
        missing = [c for c in range(C) if c not in mapping]
        if missing:
            raise DataError(f"no examples (hence no superclass) for classes {missing}")
        superclasses = np.array([mapping[c] for c in range(C)])
    return Dataset(np.array(X, dtype=np.float64).reshape(len(y), -1), labels, C, superclasses)


def _parse_int(text, what, lineno, path):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", line=lineno, path=path) from None
    if value != int(value):
        raise ParseError(f"{what} {text!r} is not an integer", line=lineno, path=path)
    return int(value)


def read_embedding_file(path):
    """Parse ``name v1 ... vd`` lines (single spaces) into an EmbeddingTable."""
    names, vectors, dim = [], [], None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) < 2:
            raise ParseError("expected a name and at least one value", line=lineno, path=path)
        if dim is None:
            dim = len(parts) - 1
        elif len(parts) - 1 != dim:
            raise ParseError(f"expected {dim} values, got {len(parts) - 1}", line=lineno, path=path)
        try:
            vectors.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
        names.append(parts[0])
    if not names:
        raise ParseError("no embeddings in file", path=path)
    return EmbeddingTable(tuple(names), np.array(vectors))


def save_embeddings(table, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for name, vec in zip(table.names, table.vectors):
            fh.write(name + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def load_embeddings(path, class_names):
    """Embeddings for ``class_names`` in that order, plus names with no embedding."""
    table = read_embedding_file(path)
    available = set(table.names)
    kept = [n for n in class_names if n in available]
    dropped = [n for n in class_names if n not in available]
    if len(kept) < 2:
        raise DataError("fewer than two classes have embeddings")
    return table.subset(kept), dropped


def drop_classes(dataset, dropped):
    """Remove examples of the named classes and renumber labels densely."""
    if dataset.class_names is None:
        raise DataError("dataset has no class names to drop by")
    dropped = set(dropped)
    keep = [c for c, n in enumerate(dataset.class_names) if n not in dropped]
    remap = np.full(dataset.class_count, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    mask = remap[dataset.labels] >= 0
    if not mask.any():
        raise DataError("no examples left after dropping classes")
    superclasses = None if dataset.superclasses is None else dataset.superclasses[keep]
    return Dataset(
        dataset.features[mask],
        remap[dataset.labels[mask]],
        len(keep),
        superclasses,
        tuple(dataset.class_names[c] for c in keep),
    )
