"""Datasets, LLD group partitions, hyperparameters and the fitted model type.

Feature matrices follow the column-sample convention used throughout the
package: a corpus with ``N`` utterances and ``d`` acoustic features is stored
as a ``d x N`` array whose rows are ordered group by group.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


class DataValidationError(ValueError):
    """Raised when a dataset, partition or model violates its shape contract."""


class ConfigError(ValueError):
    """Raised for malformed experiment configuration."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

PRESETS: dict[str, list[tuple[str, int]]] = {
    "is09-10": [
        ("ZCR", 12),
        ("Delta ZCR", 12),
        ("F0", 12),
        ("Delta F0", 12),
        ("RMS Energy", 12),
        ("Delta RMS Energy", 12),
        ("HNR", 12),
        ("Delta HNR", 12),
        ("MFCC", 144),
        ("Delta MFCC", 144),
    ],
    "egemaps-10": [
        ("F0", 18),
        ("Loudness", 16),
        ("Spectral Flux", 5),
        ("Formant", 18),
        ("Hammarberg Index", 3),
        ("MFCC", 16),
        ("Spectral Slope", 6),
        ("Alpha Ratio", 3),
        ("HNR", 2),
        ("Equivalent Sound Level", 1),
    ],
    "egemaps-4": [
        ("Frequency", 30),
        ("Energy", 20),
        ("Spectral", 37),
        ("Equivalent Sound Level", 1),
    ],
    # The usual 13-group listing repeats MFCC (16); the repeat is dropped
    # so that the groups cover the 88 eGeMAPS features exactly once.
    "egemaps-13": [
        ("F0", 10),
        ("Jitter", 2),
        ("Formant", 18),
        ("Spectral Slope", 6),
        ("MFCC", 16),
        ("Alpha Ratio", 3),
        ("Shimmer", 2),
        ("Hammarberg", 3),
        ("HNR", 2),
        ("Harmonic Difference", 4),
        ("Spectral Flux", 5),
        ("Loudness", 16),
        ("Equivalent Sound Level", 1),
    ],
}


@dataclass(frozen=True)
class GroupPartition:
    """Ordered split of the ``d`` feature rows into named LLD groups."""

    groups: tuple[tuple[str, int], ...]

    def __post_init__(self):
        groups = tuple((str(n), int(d)) for n, d in self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups:
            raise DataValidationError("a partition needs at least one group")
        seen = set()
        for name, dim in groups:
            if dim < 1:
                raise DataValidationError(f"group {name!r} has non-positive dimension {dim}")
            if name in seen:
                raise DataValidationError(f"duplicate group name {name!r}")
            seen.add(name)

    @classmethod
    def preset(cls, name: str) -> "GroupPartition":
        try:
            return cls(tuple(PRESETS[name]))
        except KeyError:
            raise ConfigError(
                f"unknown partition preset {name!r}; choose from {sorted(PRESETS)}"
            ) from None

    @classmethod
    def single(cls, total_dim: int, name: str = "all") -> "GroupPartition":
        return cls(((name, total_dim),))

    @classmethod
    def from_spec(cls, spec: Any) -> "GroupPartition":
        """Build from a preset name, a list of ``{name, dim}`` mappings or
        ``[name, dim]`` pairs."""
        if isinstance(spec, GroupPartition):
            return spec
        if isinstance(spec, str):
            return cls.preset(spec)
        if not isinstance(spec, (list, tuple)):
            raise ConfigError(f"cannot interpret partition spec {spec!r}")
        groups = []
        for item in spec:
            if isinstance(item, dict):
                try:
                    groups.append((item["name"], item["dim"]))
                except KeyError as e:
                    raise ConfigError(f"partition entry {item!r} lacks {e}") from None
            elif isinstance(item, (list, tuple)) and len(item) == 2:
                groups.append((item[0], item[1]))
            else:
                raise ConfigError(f"cannot interpret partition entry {item!r}")
        return cls(tuple(groups))

    def to_spec(self) -> list[dict[str, Any]]:
        return [{"name": n, "dim": d} for n, d in self.groups]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.groups]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.groups]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)])

    def slices(self) -> list[slice]:
        off = self.offsets
        return [slice(int(off[i]), int(off[i + 1])) for i in range(self.n_groups)]

    def collapsed(self) -> "GroupPartition":
        return GroupPartition.single(self.total_dim)


def split_rows(X: np.ndarray, partition: GroupPartition) -> list[np.ndarray]:
    """Split the rows of ``X`` into one block per group, in partition order."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != partition.total_dim:
        raise DataValidationError(
            f"matrix has {X.shape[0]} rows but partition covers {partition.total_dim}"
        )
    return [X[s] for s in partition.slices()]


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    """Encode 1-based integer labels as a ``C x N`` indicator matrix."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DataValidationError("labels must be a 1-d sequence")
    if labels.size and (labels.min() < 1 or labels.max() > n_classes):
        bad = labels[(labels < 1) | (labels > n_classes)][0]
        raise DataValidationError(f"label {bad} outside 1..{n_classes}")
    Y = np.zeros((n_classes, labels.size))
    Y[labels.astype(int) - 1, np.arange(labels.size)] = 1.0
    return Y


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusDataset:
    features: np.ndarray
    partition: GroupPartition
    labels: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DataValidationError("features must be a d x N matrix")
        if X.shape[1] < 1:
            raise DataValidationError("dataset has no samples")
        if X.shape[0] != self.partition.total_dim:
            raise DataValidationError(
                f"features have {X.shape[0]} rows but partition "
                f"{self.partition.names} sums to {self.partition.total_dim}"
            )
        if not np.all(np.isfinite(X)):
            raise DataValidationError("features contain NaN or Inf")
        object.__setattr__(self, "features", _frozen(X))
        if self.labels is not None:
            Y = np.asarray(self.labels, dtype=float)
            if Y.ndim != 2 or Y.shape[1] != X.shape[1]:
                raise DataValidationError(
                    f"label matrix shape {Y.shape} does not match {X.shape[1]} samples"
                )
            if not np.all((Y == 0) | (Y == 1)) or not np.all(Y.sum(axis=0) == 1):
                raise DataValidationError("labels must be one-hot columns")
            object.__setattr__(self, "labels", _frozen(Y))

    @property
    def n_samples(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int | None:
        return None if self.labels is None else self.labels.shape[0]

    @property
    def label_indices(self) -> np.ndarray:
        """1-based class index per sample."""
        if self.labels is None:
            raise DataValidationError("dataset is unlabeled")
        return np.argmax(self.labels, axis=0) + 1

    def blocks(self) -> list[np.ndarray]:
        return split_rows(self.features, self.partition)

    def with_partition(self, partition: GroupPartition) -> "CorpusDataset":
        return CorpusDataset(self.features, partition, self.labels)

    def without_labels(self) -> "CorpusDataset":
        return CorpusDataset(self.features, self.partition, None)


def load_dataset(
    path: str | Path,
    partition: GroupPartition,
    label_column: bool = True,
    n_classes: int | None = None,
) -> CorpusDataset:
    """Read a comma-separated feature file, one sample per row.

    Features appear in partition order. With ``label_column`` the last cell of
    every row is an integer class in ``1..C``; ``C`` defaults to the largest
    label seen. Blank lines and lines starting with ``#`` are skipped.
    """
    path = Path(path)
    expected = partition.total_dim + (1 if label_column else 0)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != expected:
                n_feat = len(row) - (1 if label_column else 0)
                raise DataValidationError(
                    f"{path}:{lineno}: expected {expected} columns "
                    f"({partition.total_dim} features{' + label' if label_column else ''}), "
                    f"got {len(row)}; {_mismatch_hint(partition, n_feat)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_number(c))
                raise DataValidationError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    if not rows:
        raise DataValidationError(f"{path}: no samples")
    table = np.array(rows)
    if not label_column:
        return CorpusDataset(table.T, partition)
    raw = table[:, -1]
    if not np.all(raw == np.round(raw)):
        raise DataValidationError(f"{path}: labels must be integers")
    labels = raw.astype(int)
    if n_classes is None:
        n_classes = int(labels.max())
    if labels.min() < 1 or labels.max() > n_classes:
        raise DataValidationError(f"{path}: labels must lie in 1..{n_classes}")
    return CorpusDataset(table[:, :-1].T, partition, one_hot(labels, n_classes))


def _mismatch_hint(partition: GroupPartition, n_features: int) -> str:
    """Name the group at which the partition and the file disagree."""
    for (name, dim), start in zip(partition.groups, partition.offsets):
        if start + dim > n_features:
            return (
                f"group {name!r} (dim {dim}) needs columns {start + 1}..{start + dim} "
                f"but only {max(n_features, 0)} feature columns are present"
            )
    last = partition.names[-1]
    return (
        f"partition ends with group {last!r} at column {partition.total_dim}, "
        f"leaving {n_features - partition.total_dim} feature column(s) unassigned"
    )


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def save_dataset(path: str | Path, dataset: CorpusDataset) -> None:
    """Write ``dataset`` in the format read by :func:`load_dataset`."""
    X = dataset.features.T
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if dataset.labels is None:
            for row in X:
                w.writerow([repr(float(v)) for v in row])
        else:
            for row, lab in zip(X, dataset.label_indices):
                w.writerow([repr(float(v)) for v in row] + [int(lab)])


def standardize(source: CorpusDataset, target: CorpusDataset) -> tuple[CorpusDataset, CorpusDataset]:
    """Per-feature z-score fitted on the source and applied to both corpora."""
    mu = source.features.mean(axis=1, keepdims=True)
    sd = source.features.std(axis=1, keepdims=True)
    sd[sd == 0] = 1.0
    return (
        CorpusDataset((source.features - mu) / sd, source.partition, source.labels),
        CorpusDataset((target.features - mu) / sd, target.partition, target.labels),
    )


# ---------------------------------------------------------------------------
# Hyperparameters and model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperparams:
    """Trade-off weights and solver controls.

    ``lambda1`` weights source/target mean alignment, ``lambda2`` the l1
    penalty on group contributions and ``lambda3`` the l2,1 penalty on the
    regression matrix.
    """

    lambda1: float = 1.0
    lambda2: float = 0.1
    lambda3: float = 1.0
    adm_max_iter: int = 50
    adm_tol: float = 1e-6
    ialm_max_iter: int = 500
    ialm_eps: float = 1e-7
    rho: float = 1.1
    kappa0: float = 0.1
    kappa_max: float = 1e6
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 5000

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a finite non-negative number, got {v}")
        for name in ("adm_max_iter", "ialm_max_iter", "lasso_max_iter"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("adm_tol", "ialm_eps", "kappa0", "kappa_max", "lasso_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.rho > 1:
            raise ConfigError("rho must exceed 1")
        if self.kappa0 > self.kappa_max:
            raise ConfigError("kappa0 must not exceed kappa_max")

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> "Hyperparams":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown hyperparameter(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_(self, **changes) -> "Hyperparams":
        return replace(self, **changes)

    @property
    def key(self) -> tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3)


@dataclass(frozen=True)
class AktlrModel:
    """Fitted group blocks ``P_i`` (each ``C x d_i``) and contributions ``alpha``."""

    blocks: tuple[np.ndarray, ...]
    alpha: np.ndarray
    partition: GroupPartition
    hyperparams: Hyperparams
    objective_trace: tuple[float, ...] = ()
    converged: bool = True

    def __post_init__(self):
        blocks = tuple(_frozen(b) for b in self.blocks)
        alpha = _frozen(np.ravel(self.alpha))
        if len(blocks) != self.partition.n_groups or alpha.size != self.partition.n_groups:
            raise DataValidationError("model blocks/alpha do not match the partition")
        C = blocks[0].shape[0]
        for b, d in zip(blocks, self.partition.dims):
            if b.shape != (C, d):
                raise DataValidationError(f"block shape {b.shape} != ({C}, {d})")
        if np.any(alpha < 0):
            raise DataValidationError("alpha must be entrywise non-negative")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))

    @property
    def n_classes(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def coef(self) -> np.ndarray:
        """Effective ``C x d`` map ``[alpha_1 P_1, ..., alpha_G P_G]``."""
        return np.hstack([a * P for a, P in zip(self.alpha, self.blocks)])

    def alpha_by_group(self) -> dict[str, float]:
        return dict(zip(self.partition.names, map(float, self.alpha)))

    def save(self, path: str | Path) -> None:
        from . import io

        io.save_model(path, self)

    @classmethod
    def load(cls, path: str | Path) -> "AktlrModel":
        from . import io

        return io.load_model(path)


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment, read from a YAML file."""

    source_path: Path
    target_path: Path
    partition: GroupPartition
    output_path: Path
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    grid: dict[str, Any] | None = None
    sweep: dict[str, Any] | None = None
    seed: int = 0
    ablation_no_group: bool = False
    standardize: bool = False
    n_classes: int | None = None
    target_labeled: bool = True
    strict: bool = False
    workers: int = 1
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    _KEYS = {
        "source", "target", "partition", "output", "hyperparams", "grid", "sweep",
        "seed", "ablation_no_group", "standardize", "n_classes", "target_labeled",
        "strict", "workers",
    }

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: str | Path = ".") -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(d) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        for key in ("source", "target", "partition", "output"):
            if key not in d:
                raise ConfigError(f"config is missing required key {key!r}")
        base = Path(base_dir)

        def _path(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        grid = d.get("grid")
        if grid is not None and not isinstance(grid, (dict, str)):
            raise ConfigError("grid must be a mapping or a preset name")
        if isinstance(grid, str):
            grid = {"preset": grid}
        try:
            seed = int(d.get("seed", 0))
            workers = int(d.get("workers", 1))
            n_classes = None if d.get("n_classes") is None else int(d["n_classes"])
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        try:
            hp = Hyperparams.from_dict(d.get("hyperparams"))
        except TypeError as e:
            raise ConfigError(str(e)) from None
        return cls(
            source_path=_path(d["source"]),
            target_path=_path(d["target"]),
            partition=GroupPartition.from_spec(d["partition"]),
            output_path=_path(d["output"]),
            hyperparams=hp,
            grid=grid,
            sweep=d.get("sweep"),
            seed=seed,
            ablation_no_group=bool(d.get("ablation_no_group", False)),
            standardize=bool(d.get("standardize", False)),
            n_classes=n_classes,
            target_labeled=bool(d.get("target_labeled", True)),
            strict=bool(d.get("strict", False)),
            workers=workers,
            raw=dict(d),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        import yaml

        path = Path(path)
        try:
            d = yaml.safe_load(path.read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse config {path}: {e}") from None
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self) -> dict[str, Any]:
        """Canonical echo of the config, sufficient to re-run it."""
        return {
            "source": str(self.source_path),
            "target": str(self.target_path),
            "partition": self.partition.to_spec(),
            "output": str(self.output_path),
            "hyperparams": self.hyperparams.to_dict(),
            "grid": self.grid,
            "sweep": self.sweep,
            "seed": self.seed,
            "ablation_no_group": self.ablation_no_group,
            "standardize": self.standardize,
            "n_classes": self.n_classes,
            "target_labeled": self.target_labeled,
            "strict": self.strict,
            "workers": self.workers,
        }


def check_same_partition(datasets: Iterable[CorpusDataset]) -> GroupPartition:
    datasets = list(datasets)
    part = datasets[0].partition
    for ds in datasets[1:]:
        if ds.partition != part:
            raise DataValidationError("source and target use different partitions")
    return part
