"""Grid-search experiment runner.

One experiment trains a model for every (grid value, seed) pair, where the
grid value is either the reduction factor of an order matrix or the lower
bound applied to clamped-cosine class similarities. Seeds are shared across
grid values, so per-seed results are paired and can be compared against the
CCE baseline with the signed-rank test.
"""

import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import data as data_mod
from . import metrics as M
from .errors import ConfigError, NoTestPossibleError, SimLossError
from .model import TrainConfig, forward, train
from .sim_matrix import cosine_matrix, lower_bound_matrix, max_off_diagonal, order_matrix

log = logging.getLogger(__name__)

METRICS = {
    # name: higher is better
    "accuracy": True,
    "mae": False,
    "mse": False,
    "superclass_accuracy": True,
    "failed_superclass_accuracy": True,
}
ORDINAL_METRICS = ["accuracy", "mae", "mse"]
GROUPED_METRICS = ["accuracy", "superclass_accuracy", "failed_superclass_accuracy"]
ORDER_GRID = [round(0.1 * k, 1) for k in range(10)]
LOWER_BOUND_GRID = ORDER_GRID + [0.99]
ALPHA = 0.05
CCE_TOLERANCE = 1e-9

_DATA_KEYS = {
    "ordinal": {"class_count", "per_class", "noise_sigma", "class_ratio", "seed", "split"},
    "grouped": {
        "group_count", "classes_per_group", "per_class", "embed_dim",
        "within_sigma", "feature_sigma", "seed", "split",
    },
    "external": {"csv", "embeddings", "class_names", "technique", "split"},
}
_TRAIN_KEYS = {"learning_rate", "batch_size", "patience", "max_epochs", "early_stop_metric", "hidden_sizes"}
_SPLIT_KEYS = {"train", "val", "test", "seed"}
_TOP_KEYS = {"task", "data", "grid", "seeds", "train", "metrics", "baseline"}


class RunFailure(SimLossError):
    def __init__(self, grid_value, seed, cause):
        self.grid_value = grid_value
        self.seed = seed
        super().__init__(f"run failed at grid value {grid_value}, seed {seed}: {cause}")


@dataclass
class ExperimentConfig:
    task: str
    data: dict
    grid: list
    seeds: list = field(default_factory=lambda: list(range(10)))
    train: dict = field(default_factory=dict)
    metrics: list = None
    baseline: float = None
    base_dir: str = field(default=".", repr=False, compare=False)

    def __post_init__(self):
        if self.task not in _DATA_KEYS:
            raise ConfigError(f"task must be one of {sorted(_DATA_KEYS)}, got {self.task!r}")
        if not isinstance(self.data, dict):
            raise ConfigError("'data' must be an object")
        _reject_unknown("data", self.data, _DATA_KEYS[self.task])
        _reject_unknown("train", self.train, _TRAIN_KEYS)
        if "split" in self.data:
            _reject_unknown("data.split", self.data["split"], _SPLIT_KEYS)
        if self.task == "external":
            if "csv" not in self.data:
                raise ConfigError("external task needs data.csv")
            if self.technique == "lower_bound" and "embeddings" not in self.data:
                raise ConfigError("lower_bound technique needs data.embeddings")
        if not self.grid:
            raise ConfigError("grid must not be empty")
        self.grid = [float(g) for g in self.grid]
        if len(set(self.grid)) != len(self.grid):
            raise ConfigError("grid values must be distinct")
        for g in self.grid:
            if not 0.0 <= g < 1.0:
                raise ConfigError(f"grid value {g} outside [0, 1)")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if any(int(s) != s or s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative integers")
        self.seeds = [int(s) for s in self.seeds]
        if self.metrics is None:
            self.metrics = list(ORDINAL_METRICS if self.technique == "order" else GROUPED_METRICS)
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}; choose from {sorted(METRICS)}")
        if self.baseline is None:
            self.baseline = 0.0 if self.technique == "order" else max(self.grid)
        self.baseline = float(self.baseline)
        if self.baseline not in self.grid:
            raise ConfigError(f"baseline {self.baseline} is not a grid value")
        try:
            self.train_config(0)
        except ValueError as exc:
            raise ConfigError(f"invalid train settings: {exc}") from None

    @property
    def technique(self):
        if self.task == "ordinal":
            return "order"
        if self.task == "grouped":
            return "lower_bound"
        technique = self.data.get("technique", "order")
        if technique not in ("order", "lower_bound"):
            raise ConfigError(f"data.technique must be 'order' or 'lower_bound', got {technique!r}")
        return technique

    @property
    def hidden_sizes(self):
        return tuple(int(h) for h in self.train.get("hidden_sizes", (64, 64)))

    def train_config(self, seed):
        default_metric = "mae" if self.technique == "order" else "accuracy"
        return TrainConfig(
            learning_rate=float(self.train.get("learning_rate", 0.001)),
            batch_size=int(self.train.get("batch_size", 128)),
            patience=int(self.train.get("patience", 10 if default_metric == "mae" else 20)),
            max_epochs=int(self.train.get("max_epochs", 100)),
            early_stop_metric=self.train.get("early_stop_metric", default_metric),
            seed=seed,
        )

    def to_dict(self):
        d = asdict(self)
        d.pop("base_dir")
        return d

    @classmethod
    def from_dict(cls, d, base_dir="."):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown("config", d, _TOP_KEYS)
        for key in ("task", "data", "grid"):
            if key not in d:
                raise ConfigError(f"config is missing '{key}'")
        kwargs = {k: d[k] for k in _TOP_KEYS if k in d and d[k] is not None}
        try:
            return cls(base_dir=str(base_dir), **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def _reject_unknown(where, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"'{where}' must be an object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}")


@dataclass
class Prepared:
    """Standardised splits plus what is needed to build each grid point's matrix."""

    train: data_mod.Dataset
    val: data_mod.Dataset
    test: data_mod.Dataset
    raw_similarity: np.ndarray = None
    dropped_classes: list = field(default_factory=list)

    @property
    def class_count(self):
        return self.train.class_count


def prepare_data(config):
    d = config.data
    table = None
    dropped = []
    if config.task == "ordinal":
        ds = data_mod.synth_ordinal(
            d.get("class_count", 30), d.get("per_class", 200), d.get("noise_sigma", 0.5),
            d.get("seed", 0), d.get("class_ratio"),
        )
    elif config.task == "grouped":
        ds, table = data_mod.synth_grouped(
            d.get("group_count", 5), d.get("classes_per_group", 4), d.get("per_class", 150),
            d.get("embed_dim", 16), d.get("within_sigma", 0.3), d.get("feature_sigma", 0.5),
            d.get("seed", 0),
        )
    else:
        ds = data_mod.load_csv(_resolve(config, d["csv"]))
        names = d.get("class_names") or [str(c) for c in range(ds.class_count)]
        if len(names) != ds.class_count:
            raise ConfigError(f"{len(names)} class names for {ds.class_count} classes")
        ds = data_mod.Dataset(ds.features, ds.labels, ds.class_count, ds.superclasses, names)
        if config.technique == "lower_bound":
            table, dropped = data_mod.load_embeddings(_resolve(config, d["embeddings"]), names)
            if dropped:
                log.warning("dropping %d classes without embeddings: %s", len(dropped), dropped)
                ds = data_mod.drop_classes(ds, dropped)
    sp = d.get("split", {})
    spec = data_mod.SplitSpec(sp.get("train", 0.6), sp.get("val", 0.2), sp.get("test", 0.2), sp.get("seed", 0))
    train_set, val_set, test_set = data_mod.standardize(*data_mod.split(ds, spec))
    raw = cosine_matrix(table) if table is not None else None
    return Prepared(train_set, val_set, test_set, raw, dropped)


def _resolve(config, path):
    return path if os.path.isabs(path) else os.path.join(config.base_dir, path)


def build_matrix(config, prepared, grid_value):
    if config.technique == "order":
        return order_matrix(prepared.class_count, grid_value)
    return lower_bound_matrix(prepared.raw_similarity, grid_value)


def evaluate_split(net, split, metric_names):
    pred = M.predict(forward(net, split.features))
    out = {}
    for name in metric_names:
        if name in ("superclass_accuracy", "failed_superclass_accuracy"):
            if split.superclasses is None:
                raise ConfigError(f"metric {name} needs superclass labels")
            out[name] = getattr(M, name)(pred, split.labels, split.superclasses)
        else:
            out[name] = getattr(M, name)(pred, split.labels)
    return out


@dataclass
class RunResult:
    grid_value: float
    seed: int
    validation: dict
    test: dict
    best_epoch: int
    epochs: int
    net: object = None


def _run_one(job):
    config, prepared, grid_value, seed = job
    try:
        S = build_matrix(config, prepared, grid_value)
        layers = (prepared.train.dim, *config.hidden_sizes, prepared.class_count)
        net, history = train((prepared.train, prepared.val), S, layers, config.train_config(seed))
        return RunResult(
            grid_value, seed,
            evaluate_split(net, prepared.val, config.metrics),
            evaluate_split(net, prepared.test, config.metrics),
            history.best_epoch, history.epochs, net,
        )
    except Exception as exc:
        raise RunFailure(grid_value, seed, exc) from exc


def run_all(config, prepared=None, jobs=1):
    """Train every (grid value, seed) pair; results come back in grid order."""
    prepared = prepared if prepared is not None else prepare_data(config)
    work = [(config, prepared, g, s) for g in config.grid for s in config.seeds]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, work))
    return [_run_one(w) for w in work]


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    meta: dict

    def to_dict(self):
        return {"config": self.config, "rows": self.rows, "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], d["rows"], d["meta"])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def row(self, grid_value):
        for r in self.rows:
            if r["grid_value"] == grid_value:
                return r
        raise KeyError(grid_value)

    def best_grid_value(self, metric, split="validation"):
        """Grid value with the best mean metric; first in grid order on ties."""
        higher = METRICS[metric]
        best = None
        for r in self.rows:
            v = r["mean"][split][metric]
            if v is None:
                continue
            if best is None or (v > best[1] if higher else v < best[1]):
                best = (r["grid_value"], v)
        return None if best is None else best[0]


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def significance_mark(values, baseline_values, metric, alpha=ALPHA):
    """Compare per-seed test values of one grid point with the baseline.

    Seeds where either side is undefined are left out of the pairing. Returns
    ``{"mark": "+"|"-"|"", "p_value": p}`` or ``{"mark": None, "p_value": None}``
    when no test is possible.
    """
    pairs = [(a, b) for a, b in zip(values, baseline_values) if a is not None and b is not None]
    if not pairs:
        return {"mark": None, "p_value": None}
    a, b = zip(*pairs)
    try:
        res = M.wilcoxon_signed_rank(a, b, alpha=alpha, higher_is_better=METRICS[metric])
    except NoTestPossibleError:
        return {"mark": None, "p_value": None}
    mark = ""
    if res.significant:
        mark = {"a_better": "+", "b_better": "-"}.get(res.direction, "")
    return {"mark": mark, "p_value": res.p_value}


def build_report(config, results, wall_time=0.0, prepared=None):
    by_grid = {g: [r for r in results if r.grid_value == g] for g in config.grid}
    rows = []
    for g in config.grid:
        runs = sorted(by_grid[g], key=lambda r: config.seeds.index(r.seed))
        per_seed = {
            split: {m: [getattr(r, split)[m] for r in runs] for m in config.metrics}
            for split in ("validation", "test")
        }
        per_seed["best_epoch"] = [r.best_epoch for r in runs]
        mean = {
            split: {m: _mean(per_seed[split][m]) for m in config.metrics}
            for split in ("validation", "test")
        }
        rows.append({"grid_value": g, "per_seed": per_seed, "mean": mean, "marks": {}, "best": {}})

    base = next(r for r in rows if r["grid_value"] == config.baseline)
    for row in rows:
        if row is base:
            continue
        for m in config.metrics:
            row["marks"][m] = significance_mark(row["per_seed"]["test"][m], base["per_seed"]["test"][m], m)

    report = ExperimentReport(config.to_dict(), rows, {})
    for m in config.metrics:
        vals = [r["mean"]["validation"][m] for r in rows if r["mean"]["validation"][m] is not None]
        best = (max if METRICS[m] else min)(vals) if vals else None
        for r in rows:
            r["best"][m] = best is not None and r["mean"]["validation"][m] == best

    meta = {
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "baseline": config.baseline,
        "technique": config.technique,
        "wall_time_seconds": wall_time,
    }
    if prepared is not None:
        S0 = build_matrix(config, prepared, config.baseline)
        deviation = float(np.max(np.abs(np.asarray(S0) - np.eye(prepared.class_count))))
        meta["baseline_is_cce"] = deviation <= CCE_TOLERANCE
        meta["class_count"] = prepared.class_count
        meta["split_sizes"] = [len(prepared.train), len(prepared.val), len(prepared.test)]
        meta["dropped_classes"] = list(prepared.dropped_classes)
        if prepared.raw_similarity is not None:
            meta["max_off_diagonal_similarity"] = max_off_diagonal(prepared.raw_similarity)
        if not meta["baseline_is_cce"]:
            log.warning(
                "baseline grid value %s does not reduce to the identity matrix "
                "(max deviation %.3g); it is not a true CCE reference", config.baseline, deviation,
            )
    report.meta = meta
    return report


def run_experiment(config, jobs=1):
    """Run the full grid and return ``(report, prepared data, run results)``."""
    start = time.perf_counter()
    prepared = prepare_data(config)
    results = run_all(config, prepared, jobs)
    report = build_report(config, results, time.perf_counter() - start, prepared)
    return report, prepared, results


def run_grid(config, jobs=1):
    return run_experiment(config, jobs)[0]


def analyze_distributions(config, prepared, results, target_class=None, threshold=0.01):
    """Mean output distributions and representative-class counts per grid value.

    Uses every example (train, validation and test). ``target_class``
    additionally restricts the mean to examples of that class; it defaults to
    the middle class.
    """
    if config.technique != "order":
        raise ConfigError("distribution analysis needs ordered classes (order-matrix technique)")
    C = prepared.class_count
    if target_class is None:
        target_class = C // 2
    if not 0 <= target_class < C:
        raise ConfigError(f"target class {target_class} outside [0, {C})")
    X = np.vstack([prepared.train.features, prepared.val.features, prepared.test.features])
    y = np.concatenate([prepared.train.labels, prepared.val.labels, prepared.test.labels])
    class_freq = np.bincount(y, minlength=C) / y.size

    out = []
    for g in config.grid:
        runs = [r for r in results if r.grid_value == g]
        overall = [M.mean_output_distribution(r.net, X) for r in runs]
        target = [M.mean_output_distribution(r.net, X, y, target_class) for r in runs]
        counts = [M.representative_class_count(d, threshold) for d in overall]
        mean_overall = np.mean(overall, axis=0)
        out.append({
            "grid_value": g,
            "overall": mean_overall.tolist(),
            "target": np.mean(target, axis=0).tolist(),
            "spike_counts": counts,
            "mean_spike_count": float(np.mean(counts)),
            "spike_count_of_mean": M.representative_class_count(mean_overall, threshold),
        })
    return {
        "target_class": int(target_class),
        "threshold": threshold,
        "class_frequency": class_freq.tolist(),
        "grid": out,
    }


def render_markdown(report):
    metrics = report.config["metrics"]
    fmt = "{:.4f}".format
    head = ["grid value"] + [f"val {m}" for m in metrics] + [f"test {m}" for m in metrics]
    lines = [
        "| " + " | ".join(head) + " |",
        "|" + "|".join("---" for _ in head) + "|",
    ]
    for r in report.rows:
        cells = [f"{r['grid_value']:g}"]
        for m in metrics:
            v = r["mean"]["validation"][m]
            s = "n/a" if v is None else fmt(v)
            cells.append(f"**{s}**" if r["best"].get(m) else s)
        for m in metrics:
            v = r["mean"]["test"][m]
            s = "n/a" if v is None else fmt(v)
            mark = (r["marks"].get(m) or {}).get("mark") or ""
            cells.append(s + (f" ({mark})" if mark else ""))
        lines.append("| " + " | ".join(cells) + " |")
    meta = report.meta
    lines += [
        "",
        f"Baseline grid value: {meta.get('baseline')}. "
        f"Means over {len(report.config['seeds'])} seeds. Best validation means in bold; "
        "(+)/(-) mark test means significantly better/worse than the baseline "
        f"(two-sided Wilcoxon signed-rank, alpha={ALPHA}).",
    ]
    return "\n".join(lines) + "\n"


def emit_report(report, path, fmt="json"):
    """Write the report as ``json`` or ``markdown`` and return the path."""
    if fmt == "json":
        text = report.to_json() + "\n"
    elif fmt == "markdown":
        text = render_markdown(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentReport.from_dict(json.load(fh))
