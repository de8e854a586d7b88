"""Seeded synthetic corpora with a known informative group.

Group 1 carries class-dependent means and is distributed identically in both
corpora. Every other group is pure noise, and in the target corpus those noise
groups undergo a corpus shift: a random per-feature offset plus a scale
change. A model that leans on the noise groups therefore transfers badly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .data import CorpusDataset, GroupPartition, one_hot, save_dataset


def make_planted_task(
    seed: int = 0,
    n_source: int = 300,
    n_target: int = 300,
    n_classes: int = 3,
    group_dims: tuple[int, ...] = (10, 10, 10),
    separation: float = 1.0,
    noise: float = 1.0,
    shift: float = 2.0,
    target_scale: float = 5.0,
) -> tuple[CorpusDataset, CorpusDataset]:
    """Return ``(source, target)``; both carry labels, target's only for scoring."""
    rng = np.random.default_rng(seed)
    partition = GroupPartition(tuple((f"group{i + 1}", d) for i, d in enumerate(group_dims)))
    means = separation * rng.standard_normal((group_dims[0], n_classes))

    def corpus(n, shifted):
        y = np.arange(n) % n_classes + 1
        informative = means[:, y - 1] + noise * rng.standard_normal((group_dims[0], n))
        rest = [noise * rng.standard_normal((d, n)) for d in group_dims[1:]]
        if shifted:
            rest = [target_scale * r + shift * rng.standard_normal((r.shape[0], 1)) for r in rest]
        return CorpusDataset(np.vstack([informative, *rest]), partition, one_hot(y, n_classes))

    return corpus(n_source, False), corpus(n_target, True)


# hyperparameters under which the planted structure is recovered
PLANTED_HYPERPARAMS = {"lambda1": 1.0, "lambda2": 10.0, "lambda3": 1.0}


def write_fixture(directory: str | Path, seed: int = 0, n_samples: int = 20) -> dict[str, Path]:
    """Write a small source/target pair plus ready-to-run configs."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    source, target = make_planted_task(
        seed, n_source=n_samples, n_target=n_samples, n_classes=2, group_dims=(4, 3, 3)
    )
    paths = {"source": out / "source.csv", "target": out / "target.csv"}
    save_dataset(paths["source"], source)
    save_dataset(paths["target"], target)
    common = {
        "source": "source.csv",
        "target": "target.csv",
        "partition": source.partition.to_spec(),
        "seed": seed,
    }
    configs = {
        "train": {**common, "output": "out/train", "hyperparams": dict(PLANTED_HYPERPARAMS)},
        "grid": {
            **common,
            "output": "out/grid",
            "grid": {"lambda1": [1, 10], "lambda2": [1, 10], "lambda3": [1, 10]},
        },
        "sweep": {
            **common,
            "output": "out/sweep",
            "hyperparams": dict(PLANTED_HYPERPARAMS),
            "sweep": {"axis": "lambda2", "values": "[2:2:10]"},
        },
    }
    for name, cfg in configs.items():
        p = out / f"{name}.yaml"
        p.write_text(yaml.safe_dump(cfg, sort_keys=False))
        paths[name] = p
    return paths
