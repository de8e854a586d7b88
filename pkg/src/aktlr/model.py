"""Group-weighted transfer linear regression: objective, ADM training, prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import (
    AktlrModel,
    CorpusDataset,
    DataValidationError,
    GroupPartition,
    Hyperparams,
    check_same_partition,
)
from .solvers import (
    SolveDiagnostics,
    ialm_l21_regression,
    l21_norm,
    nonneg_lasso,
    project_simplex,
)


@dataclass(frozen=True)
class AugmentedProblem:
    """Regression targets and group blocks with the mean-gap column appended.

    ``Y_aug = [Y_s, 0]`` and ``Xtilde_blocks[i] = [X_i^s, sqrt(lambda1) * dx_i]``
    so that the alignment penalty becomes one more (zero-target) sample.
    """

    Y_aug: np.ndarray
    Xtilde_blocks: tuple[np.ndarray, ...]
    mean_diffs: tuple[np.ndarray, ...]

    @property
    def n_groups(self) -> int:
        return len(self.Xtilde_blocks)


@dataclass
class IterationRecord:
    objective: float
    alpha: np.ndarray
    p_l21: float
    alpha_diag: SolveDiagnostics | None
    p_diag: SolveDiagnostics

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "alpha": [float(a) for a in self.alpha],
            "p_l21": self.p_l21,
            "alpha_diag": None if self.alpha_diag is None else self.alpha_diag.to_dict(),
            "p_diag": self.p_diag.to_dict(),
        }


@dataclass
class TrainTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.records]

    @property
    def subsolvers_converged(self) -> bool:
        return all(
            r.p_diag.converged and (r.alpha_diag is None or r.alpha_diag.converged)
            for r in self.records
        )

    def __len__(self) -> int:
        return len(self.records)


def mean_difference(source: CorpusDataset, target: CorpusDataset) -> list[np.ndarray]:
    """Per-group gap between the source and target feature means."""
    check_same_partition([source, target])
    gap = source.features.mean(axis=1) - target.features.mean(axis=1)
    return [gap[s] for s in source.partition.slices()]


def build_augmented(source: CorpusDataset, target: CorpusDataset, lambda1: float) -> AugmentedProblem:
    if lambda1 < 0:
        raise ValueError("lambda1 must be non-negative")
    if source.labels is None:
        raise DataValidationError("source corpus must be labeled")
    diffs = mean_difference(source, target)
    w = np.sqrt(lambda1)
    blocks = tuple(
        np.hstack([Xs, w * dx[:, None]]) for Xs, dx in zip(source.blocks(), diffs)
    )
    C = source.labels.shape[0]
    Y_aug = np.hstack([source.labels, np.zeros((C, 1))])
    return AugmentedProblem(Y_aug, blocks, tuple(diffs))


def flatten(M: np.ndarray) -> np.ndarray:
    """Stack the columns of ``M`` into one vector."""
    return np.asarray(M).ravel(order="F")


def _fit_term(alpha, blocks, problem: AugmentedProblem) -> float:
    R = problem.Y_aug - sum(a * P @ Xt for a, P, Xt in zip(alpha, blocks, problem.Xtilde_blocks))
    return float(np.sum(R * R))


def augmented_objective(alpha, blocks, problem: AugmentedProblem, lambda2: float, lambda3: float) -> float:
    return (
        _fit_term(alpha, blocks, problem)
        + lambda2 * float(np.sum(np.abs(alpha)))
        + lambda3 * sum(l21_norm(P) for P in blocks)
    )


def objective(alpha, blocks, source: CorpusDataset, target: CorpusDataset, hyperparams: Hyperparams) -> float:
    """Training objective evaluated directly on the two corpora.

    ``||Y_s - sum a_i P_i X_i^s||_F^2 + l1 ||sum a_i P_i dx_i||^2
    + l2 ||a||_1 + l3 sum ||P_i||_{2,1}``
    """
    hp = hyperparams
    Xs = source.blocks()
    diffs = mean_difference(source, target)
    fit = source.labels - sum(a * P @ X for a, P, X in zip(alpha, blocks, Xs))
    gap = sum(a * P @ dx for a, P, dx in zip(alpha, blocks, diffs))
    return float(
        np.sum(fit * fit)
        + hp.lambda1 * float(gap @ gap)
        + hp.lambda2 * float(np.sum(np.abs(alpha)))
        + hp.lambda3 * sum(l21_norm(P) for P in blocks)
    )


def alpha_step(
    blocks,
    problem: AugmentedProblem,
    lambda2: float,
    tol: float = 1e-8,
    max_iter: int = 5000,
    alpha0=None,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Best non-negative group weights for fixed ``P_i`` (a non-negative LASSO)."""
    Z = np.column_stack([flatten(P @ Xt) for P, Xt in zip(blocks, problem.Xtilde_blocks)])
    y = flatten(problem.Y_aug)
    return nonneg_lasso(Z, y, lambda2, tol=tol, max_iter=max_iter, alpha0=alpha0)


def p_step(
    alpha,
    problem: AugmentedProblem,
    lambda3: float,
    hyperparams: Hyperparams | None = None,
    P0=None,
) -> tuple[list[np.ndarray], SolveDiagnostics]:
    """Best ``P_i`` for fixed weights: l2,1 regression on ``[a_1 Xt_1; ...; a_G Xt_G]``."""
    hp = hyperparams or Hyperparams()
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ValueError("alpha must be non-negative")
    X = np.vstack([a * Xt for a, Xt in zip(alpha, problem.Xtilde_blocks)])
    init = None if P0 is None else np.hstack(P0)
    P, diag = ialm_l21_regression(
        X,
        problem.Y_aug,
        lambda3,
        max_iter=hp.ialm_max_iter,
        eps=hp.ialm_eps,
        rho=hp.rho,
        kappa0=hp.kappa0,
        kappa_max=hp.kappa_max,
        P0=init,
    )
    dims = [Xt.shape[0] for Xt in problem.Xtilde_blocks]
    return np.split(P, np.cumsum(dims)[:-1], axis=1), diag


def train(
    source: CorpusDataset,
    target: CorpusDataset,
    hyperparams: Hyperparams | None = None,
    no_group: bool = False,
) -> tuple[AktlrModel, TrainTrace]:
    """Fit group weights and regression blocks by alternating exact block updates.

    Starts from ``alpha = 1``, ``P = 0`` and runs the ``P`` update first (the
    weight update is degenerate while ``P = 0``). Each block update is kept
    only if it does not raise the objective, and blocks whose weight drops to
    zero are reset to zero, so the recorded objective is non-increasing up to
    sub-solver accuracy. Stops when the relative objective change falls below
    ``adm_tol``.

    With ``no_group`` the partition is collapsed into a single group whose
    weight stays fixed at 1.

    Target labels, if present, are never used.
    """
    hp = hyperparams or Hyperparams()
    if source.labels is None:
        raise DataValidationError("source corpus must be labeled")
    check_same_partition([source, target])
    if no_group:
        collapsed = source.partition.collapsed()
        source = source.with_partition(collapsed)
        target = target.with_partition(collapsed)
    partition: GroupPartition = source.partition
    problem = build_augmented(source, target, hp.lambda1)
    G = partition.n_groups
    C = source.labels.shape[0]

    alpha = np.ones(G)
    blocks = [np.zeros((C, d)) for d in partition.dims]

    def f(a, B):
        return augmented_objective(a, B, problem, hp.lambda2, hp.lambda3)

    current = f(alpha, blocks)
    trace = TrainTrace()
    for _ in range(hp.adm_max_iter):
        previous = current

        new_blocks, p_diag = p_step(alpha, problem, hp.lambda3, hp, P0=blocks)
        cand = f(alpha, new_blocks)
        if cand <= current:
            blocks, current = new_blocks, cand

        a_diag = None
        if not no_group:
            new_alpha, a_diag = alpha_step(
                blocks, problem, hp.lambda2, hp.lasso_tol, hp.lasso_max_iter, alpha0=alpha
            )
            cand = f(new_alpha, blocks)
            if cand <= current:
                alpha, current = new_alpha, cand
            dead = alpha == 0
            if dead.any():
                blocks = [np.zeros_like(P) if z else P for P, z in zip(blocks, dead)]
                current = f(alpha, blocks)

        trace.records.append(
            IterationRecord(
                objective=current,
                alpha=alpha.copy(),
                p_l21=sum(l21_norm(P) for P in blocks),
                alpha_diag=a_diag,
                p_diag=p_diag,
            )
        )
        if abs(previous - current) <= hp.adm_tol * abs(previous):
            trace.converged = True
            break

    model = AktlrModel(
        blocks=tuple(blocks),
        alpha=alpha,
        partition=partition,
        hyperparams=hp,
        objective_trace=tuple(trace.objectives),
        converged=trace.converged,
    )
    return model, trace


def scores(model: AktlrModel, X: np.ndarray) -> np.ndarray:
    """Raw class scores ``sum a_i P_i x_i`` for each column of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] != model.partition.total_dim:
        raise DataValidationError(
            f"features have {X.shape[0]} dimensions, model expects {model.partition.total_dim}"
        )
    return model.coef @ X


def predict(model: AktlrModel, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Label (1-based) and simplex-projected score vector for one sample.

    Ties in the projected scores go to the lowest class index.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataValidationError("predict expects a single feature vector")
    y_hat = project_simplex(scores(model, x[:, None])[:, 0])
    return int(np.argmax(y_hat)) + 1, y_hat


def predict_batch(model: AktlrModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels and ``C x N`` projected scores for the columns of ``X``."""
    S = scores(model, X)
    Y_hat = np.column_stack([project_simplex(s) for s in S.T]) if S.shape[1] else S
    return np.argmax(Y_hat, axis=0) + 1, Y_hat
