"""Model container (.npz) and experiment report (.json) serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .data import AktlrModel, DataValidationError, GroupPartition, Hyperparams

MODEL_FORMAT = 1
REPORT_FORMAT = 1

# keys whose values change between otherwise identical runs
VOLATILE_KEYS = frozenset({"created_at", "wall_time"})


def save_model(path: str | Path, model: AktlrModel) -> None:
    arrays = {f"block_{i}": P for i, P in enumerate(model.blocks)}
    np.savez(
        Path(path),
        format_version=np.array(MODEL_FORMAT),
        alpha=model.alpha,
        group_names=np.array(model.partition.names, dtype=str),
        group_dims=np.array(model.partition.dims, dtype=np.int64),
        hyperparams=np.array(json.dumps(model.hyperparams.to_dict(), sort_keys=True)),
        objective_trace=np.array(model.objective_trace, dtype=float),
        converged=np.array(model.converged),
        **arrays,
    )


def load_model(path: str | Path) -> AktlrModel:
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            version = int(z["format_version"])
            if version != MODEL_FORMAT:
                raise DataValidationError(f"unsupported model format {version}")
            names = [str(n) for n in z["group_names"]]
            dims = [int(d) for d in z["group_dims"]]
            return AktlrModel(
                blocks=tuple(z[f"block_{i}"] for i in range(len(names))),
                alpha=z["alpha"],
                partition=GroupPartition(tuple(zip(names, dims))),
                hyperparams=Hyperparams.from_dict(json.loads(str(z["hyperparams"]))),
                objective_trace=tuple(z["objective_trace"]),
                converged=bool(z["converged"]),
            )
    except KeyError as e:
        raise DataValidationError(f"{path}: model file lacks {e}") from None


@dataclass
class ExperimentReport:
    command: str
    config: dict[str, Any]
    seed: int
    runs: list[dict[str, Any]] = field(default_factory=list)
    tool_version: str = __version__
    created_at: str | None = None
    format_version: int = REPORT_FORMAT

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": self.format_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "seed": self.seed,
            "created_at": self.created_at,
            "config": self.config,
            "runs": self.runs,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentReport":
        return cls(
            command=d["command"],
            config=d["config"],
            seed=d["seed"],
            runs=d.get("runs", []),
            tool_version=d.get("tool_version", ""),
            created_at=d.get("created_at"),
            format_version=d.get("format_version", REPORT_FORMAT),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def strip_volatile(obj: Any) -> Any:
    """Drop timestamp and timing entries, recursively."""
    if isinstance(obj, dict):
        return {k: strip_volatile(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, list):
        return [strip_volatile(v) for v in obj]
    return obj


def alpha_shares(alpha: dict[str, float]) -> list[tuple[str, float, float]]:
    """``(group, alpha, alpha / sum(alpha))`` rows; all shares are 0 when the sum is 0."""
    total = sum(alpha.values())
    return [(name, a, a / total if total > 0 else 0.0) for name, a in alpha.items()]
