"""UAR metric, target evaluation, hyperparameter grids and sensitivity sweeps.

Grid and sweep cells train independent models, so they can be farmed out to
worker processes; results are sorted after collection and therefore do not
depend on execution order.
"""

from __future__ import annotations

import itertools
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .data import AktlrModel, ConfigError, CorpusDataset, DataValidationError, Hyperparams
from .model import predict_batch, train


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with ground truth along rows and predictions along columns."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(c < 0):
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @classmethod
    def from_labels(cls, truth: Sequence[int], pred: Sequence[int], n_classes: int) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (np.asarray(truth) - 1, np.asarray(pred) - 1), 1)
        return cls(counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    def recalls(self) -> np.ndarray:
        support = self.counts.sum(axis=1)
        if np.any(support == 0):
            missing = [i + 1 for i in np.nonzero(support == 0)[0]]
            raise ValueError(f"class(es) {missing} have no ground-truth samples")
        return np.diag(self.counts) / support

    def to_list(self) -> list[list[int]]:
        return self.counts.tolist()


def uar(cm: ConfusionMatrix | np.ndarray) -> float:
    """Unweighted average recall in percent: mean over classes of the fraction
    of that class's samples that were predicted correctly."""
    if not isinstance(cm, ConfusionMatrix):
        cm = ConfusionMatrix(np.asarray(cm))
    return float(np.mean(cm.recalls()) * 100.0)


def evaluate(model: AktlrModel, target: CorpusDataset) -> tuple[float, ConfusionMatrix]:
    """Predict every labeled target sample and score the predictions."""
    if target.labels is None:
        raise DataValidationError("evaluation needs target labels")
    C = model.n_classes
    if target.labels.shape[0] > C:
        raise DataValidationError(
            f"target has {target.labels.shape[0]} classes, model predicts {C}"
        )
    pred, _ = predict_batch(model, target.features)
    cm = ConfusionMatrix.from_labels(target.label_indices, pred, C)
    # classes absent from the target do not enter the average
    present = cm.counts.sum(axis=1) > 0
    return float(np.mean(np.diag(cm.counts)[present] / cm.counts.sum(axis=1)[present]) * 100), cm


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

_RANGE = re.compile(r"^\s*\[\s*([^:\]]+)\s*:\s*([^:\]]+)\s*(?::\s*([^:\]]+)\s*)?\]\s*$")


def parse_range(spec: Any) -> list[float]:
    """Expand ``"[a:b]"`` (unit step) or ``"[a:s:b]"`` into an inclusive list.

    Lists and scalars pass through unchanged.
    """
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        try:
            return [float(v) for v in spec]
        except (TypeError, ValueError):
            raise ConfigError(f"non-numeric value in {spec!r}") from None
    m = _RANGE.match(str(spec))
    if not m:
        raise ConfigError(f"cannot parse range {spec!r}")
    a, b, c = m.groups()
    try:
        start, step, stop = (float(a), 1.0, float(b)) if c is None else (float(a), float(b), float(c))
    except ValueError:
        raise ConfigError(f"non-numeric range {spec!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"empty range {spec!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(n)]


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per trade-off parameter.

    The defaults (the ``"standard"`` preset) span 1..100 for the alignment
    and l2,1 weights and 0.1..1.0 in steps of 0.1 for the group-sparsity
    weight, i.e. 100 000 cells.
    """

    lambda1_values: tuple[float, ...] = tuple(parse_range("[1:100]"))
    lambda2_values: tuple[float, ...] = tuple(parse_range("[0.1:0.1:1]"))
    lambda3_values: tuple[float, ...] = tuple(parse_range("[1:100]"))

    def __post_init__(self):
        for name in ("lambda1_values", "lambda2_values", "lambda3_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ConfigError(f"{name} is empty")
            if any(v < 0 for v in vals):
                raise ConfigError(f"{name} contains negative values")
            object.__setattr__(self, name, vals)

    @classmethod
    def standard(cls) -> "GridSpec":
        return cls()

    @classmethod
    def from_config(cls, d: dict[str, Any]) -> "GridSpec":
        d = dict(d)
        preset = d.pop("preset", None)
        if preset is not None and preset != "standard":
            raise ConfigError(f"unknown grid preset {preset!r}")
        base = cls()
        vals = {}
        for short, name in (("lambda1", "lambda1_values"), ("lambda2", "lambda2_values"), ("lambda3", "lambda3_values")):
            v = d.pop(short, None)
            vals[name] = tuple(parse_range(v)) if v is not None else getattr(base, name)
        if d:
            raise ConfigError(f"unknown grid key(s): {sorted(d)}")
        return cls(**vals)

    def cells(self) -> list[tuple[float, float, float]]:
        return list(itertools.product(self.lambda1_values, self.lambda2_values, self.lambda3_values))

    def __len__(self) -> int:
        return len(self.lambda1_values) * len(self.lambda2_values) * len(self.lambda3_values)

    def to_dict(self) -> dict[str, list[float]]:
        return {
            "lambda1": list(self.lambda1_values),
            "lambda2": list(self.lambda2_values),
            "lambda3": list(self.lambda3_values),
        }


@dataclass
class RunResult:
    """Outcome of one train + evaluate cell."""

    hyperparams: Hyperparams
    uar: float | None
    alpha: dict[str, float] = field(default_factory=dict)
    confusion: list[list[int]] | None = None
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    subsolvers_converged: bool = False
    wall_time: float = 0.0
    error: str | None = None

    def sort_key(self):
        return (self.uar is None, -(self.uar or 0.0), self.hyperparams.key)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda1": self.hyperparams.lambda1,
            "lambda2": self.hyperparams.lambda2,
            "lambda3": self.hyperparams.lambda3,
            "uar": self.uar,
            "alpha": self.alpha,
            "confusion": self.confusion,
            "objective_trace": self.objective_trace,
            "converged": self.converged,
            "subsolvers_converged": self.subsolvers_converged,
            "wall_time": self.wall_time,
            "error": self.error,
        }


def run_cell(
    source: CorpusDataset,
    target: CorpusDataset,
    hyperparams: Hyperparams,
    no_group: bool = False,
) -> tuple[RunResult, AktlrModel | None]:
    """Train and evaluate one configuration; errors are captured, not raised."""
    t0 = time.perf_counter()
    try:
        model, trace = train(source, target.without_labels(), hyperparams, no_group=no_group)
        score, cm = evaluate(model, target)
    except (ValueError, np.linalg.LinAlgError) as e:
        return RunResult(hyperparams, None, wall_time=time.perf_counter() - t0, error=str(e)), None
    return (
        RunResult(
            hyperparams=hyperparams,
            uar=score,
            alpha=model.alpha_by_group(),
            confusion=cm.to_list(),
            objective_trace=list(model.objective_trace),
            converged=trace.converged,
            subsolvers_converged=trace.subsolvers_converged,
            wall_time=time.perf_counter() - t0,
        ),
        model,
    )


def _cell_job(args) -> RunResult:
    return run_cell(*args)[0]


def _run_many(jobs: list, workers: int) -> list[RunResult]:
    if workers <= 1 or len(jobs) <= 1:
        return [_cell_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def grid_search(
    source: CorpusDataset,
    target: CorpusDataset,
    grid: GridSpec,
    base: Hyperparams | None = None,
    no_group: bool = False,
    workers: int = 1,
) -> list[RunResult]:
    """Train one model per grid cell and rank the cells by target UAR.

    Uses target labels for scoring, so this is a benchmark-reporting
    protocol rather than a model-selection rule. Ties are broken by
    ``(lambda1, lambda2, lambda3)``; failed cells sort last.
    """
    base = base or Hyperparams()
    jobs = [
        (source, target, base.with_(lambda1=l1, lambda2=l2, lambda3=l3), no_group)
        for l1, l2, l3 in grid.cells()
    ]
    return sorted(_run_many(jobs, workers), key=RunResult.sort_key)


SWEEP_AXES = ("lambda1", "lambda2", "lambda3")


def sensitivity_sweep(
    source: CorpusDataset,
    target: CorpusDataset,
    base: Hyperparams,
    axis: str,
    values: Sequence[float],
    no_group: bool = False,
    workers: int = 1,
) -> list[tuple[float, RunResult]]:
    """Vary one trade-off weight with the other two held at ``base``.

    Points are returned in input order.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = [float(v) for v in values]
    jobs = [(source, target, base.with_(**{axis: v}), no_group) for v in values]
    return list(zip(values, _run_many(jobs, workers)))
