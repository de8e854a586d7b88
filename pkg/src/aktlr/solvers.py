"""Numerical kernels: non-negative LASSO, l2,1 prox, IALM regression and
simplex projection.

All routines are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    final_residual: float
    converged: bool
    objective: float

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "objective": self.objective,
        }


# ---------------------------------------------------------------------------
# Non-negative LASSO
# ---------------------------------------------------------------------------


def lasso_objective(Z, y, alpha, lambda2) -> float:
    r = y - Z @ alpha
    return float(r @ r + lambda2 * np.sum(np.abs(alpha)))


def lasso_kkt_residual(Z, y, alpha, lambda2) -> float:
    """Largest violation of the optimality conditions of the non-negative LASSO.

    With ``g = 2 Z^T (Z alpha - y) + lambda2`` the point is optimal iff
    ``alpha >= 0``, ``g >= 0`` and ``alpha * g == 0``.
    """
    g = 2.0 * Z.T @ (Z @ alpha - y) + lambda2
    return float(
        max(
            np.max(-alpha, initial=0.0),
            np.max(-g, initial=0.0),
            np.max(np.abs(alpha * g), initial=0.0),
        )
    )


def _polish(H, b, lambda2, alpha):
    """Solve the stationarity equations on the current support exactly."""
    S = alpha > 0
    out = np.zeros_like(alpha)
    if not S.any():
        return out
    rhs = b[S] - lambda2 / 2.0
    sol, *_ = np.linalg.lstsq(H[np.ix_(S, S)], rhs, rcond=None)
    if np.any(sol < 0):
        return None
    out[S] = sol
    return out


def nonneg_lasso(
    Z: np.ndarray,
    y: np.ndarray,
    lambda2: float,
    tol: float = 1e-8,
    max_iter: int = 5000,
    alpha0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Minimize ``||y - Z a||^2 + lambda2 * ||a||_1`` subject to ``a >= 0``.

    Monotone FISTA with step ``1/L``, ``L = 2 * lambda_max(Z^T Z)``. Every few
    iterations the support of the iterate is polished by solving the
    restricted normal equations, which makes the returned point exact once
    the support has been identified. Convergence is certified by
    :func:`lasso_kkt_residual` ``<= tol``.

    Returns the best iterate with ``converged=False`` if ``max_iter`` is hit.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if Z.ndim != 2 or Z.shape[0] != y.size:
        raise ValueError(f"shape mismatch: Z {Z.shape}, y {y.shape}")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
        raise ValueError("nonneg_lasso received non-finite input")
    if lambda2 < 0:
        raise ValueError("lambda2 must be non-negative")
    G = Z.shape[1]
    H = Z.T @ Z
    b = Z.T @ y
    L = 2.0 * float(np.linalg.eigvalsh(H)[-1]) if G else 0.0

    x = np.zeros(G) if alpha0 is None else np.maximum(np.asarray(alpha0, dtype=float), 0.0)

    def f(a):
        return lasso_objective(Z, y, a, lambda2)

    def kkt(a):
        return lasso_kkt_residual(Z, y, a, lambda2)

    if L <= 0.0:
        # Z == 0: the loss is flat, only the penalty matters.
        if lambda2 > 0:
            x = np.zeros(G)
        return x, SolveDiagnostics(0, kkt(x), True, f(x))

    fx = f(x)
    yk = x.copy()
    t = 1.0
    it = 0
    check_every = 10
    res = kkt(x)
    while it < max_iter:
        it += 1
        grad = 2.0 * (H @ yk - b) + lambda2
        z = np.maximum(yk - grad / L, 0.0)
        fz = f(z)
        x_old = x
        if fz <= fx:
            x, fx = z, fz
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        yk = x + (t / t_new) * (z - x) + ((t - 1.0) / t_new) * (x - x_old)
        t = t_new
        if it % check_every == 0 or it == max_iter:
            cand = _polish(H, b, lambda2, x)
            if cand is not None:
                fc = f(cand)
                if fc <= fx:
                    x, fx = cand, fc
            res = kkt(x)
            if res <= tol:
                return x, SolveDiagnostics(it, res, True, fx)
            # restart momentum when the polished point replaced the iterate
            yk = x.copy()
            t = 1.0
    return x, SolveDiagnostics(it, res, res <= tol, fx)


# ---------------------------------------------------------------------------
# l2,1 proximal operator
# ---------------------------------------------------------------------------


def l21_norm(M: np.ndarray) -> float:
    """Sum of the Euclidean norms of the columns of ``M``."""
    return float(np.sum(np.linalg.norm(M, axis=0)))


def prox_l21(M: np.ndarray, threshold: float) -> np.ndarray:
    """Column-wise shrinkage, the minimizer of
    ``threshold * ||P||_{2,1} + 0.5 * ||P - M||_F^2``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    M = np.asarray(M, dtype=float)
    if threshold == 0:
        return M.copy()
    norms = np.linalg.norm(M, axis=0)
    keep = norms > threshold
    out = np.zeros_like(M)
    out[:, keep] = M[:, keep] * (1.0 - threshold / norms[keep])
    return out


# ---------------------------------------------------------------------------
# l2,1-regularized multivariate regression via inexact ALM
# ---------------------------------------------------------------------------


@dataclass
class IalmState:
    P: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    kappa: float


class QUpdate:
    """Exact minimizer over ``Q`` of the augmented Lagrangian

    ``||Y - QX||_F^2 + tr(T^T (P - Q)) + kappa/2 ||P - Q||_F^2``

    which is ``Q = (2 Y X^T + T + kappa P)(2 X X^T + kappa I)^{-1}``. The
    eigendecomposition of ``X X^T`` is cached so that each call costs two
    ``C x d x d`` products regardless of ``kappa``.
    """

    def __init__(self, X: np.ndarray, Y: np.ndarray):
        self.X = X
        self.Y = Y
        self.YXt2 = 2.0 * Y @ X.T
        evals, self.V = np.linalg.eigh(X @ X.T)
        self.evals2 = 2.0 * np.maximum(evals, 0.0)

    def __call__(self, P: np.ndarray, T: np.ndarray, kappa: float) -> np.ndarray:
        rhs = self.YXt2 + T + kappa * P
        return ((rhs @ self.V) / (self.evals2 + kappa)) @ self.V.T

    def gradient(self, Q, P, T, kappa) -> np.ndarray:
        """Partial derivative of the Lagrangian with respect to ``Q``."""
        return -2.0 * (self.Y - Q @ self.X) @ self.X.T - T - kappa * (P - Q)


def q_update(X, Y, P, T, kappa) -> np.ndarray:
    return QUpdate(np.asarray(X, float), np.asarray(Y, float))(P, T, kappa)


def l21_regression_objective(X, Y, P, lambda3) -> float:
    R = Y - P @ X
    return float(np.sum(R * R) + lambda3 * l21_norm(P))


def ialm_l21_regression(
    X: np.ndarray,
    Y: np.ndarray,
    lambda3: float,
    *,
    max_iter: int = 500,
    eps: float = 1e-7,
    rho: float = 1.1,
    kappa0: float = 0.1,
    kappa_max: float = 1e6,
    P0: np.ndarray | None = None,
    return_state: bool = False,
):
    """Minimize ``||Y - P X||_F^2 + lambda3 * ||P||_{2,1}`` over ``P`` (``C x d``).

    ``X`` is ``d x m`` and ``Y`` is ``C x m``. The splitting ``P = Q`` is
    handled with an inexact augmented Lagrangian: exact ``Q`` step, column-wise
    shrinkage for ``P``, then multiplier ascent ``T += kappa (P - Q)``.

    ``kappa`` is multiplied by ``rho`` (capped at ``kappa_max``) only while the
    primal gap ``||P - Q||_F`` dominates the scaled dual residual
    ``kappa ||P_k - P_{k-1}||_F / (1 + ||2 Y X^T||_F)``. Growing it on every
    iteration freezes the iterates before the multiplier has settled, which
    leaves underdetermined problems (``d > m``) visibly suboptimal. The solve
    is converged when both residuals are below ``eps``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError(f"shape mismatch: X {X.shape}, Y {Y.shape}")
    if lambda3 < 0:
        raise ValueError("lambda3 must be non-negative")
    C, d = Y.shape[0], X.shape[0]
    if not X.any() or not Y.any():
        P = np.zeros((C, d))
        diag = SolveDiagnostics(0, 0.0, True, l21_regression_objective(X, Y, P, lambda3))
        if return_state:
            return P, diag, IalmState(P, P.copy(), np.zeros((C, d)), kappa0)
        return P, diag

    qstep = QUpdate(X, Y)
    scale = 1.0 + float(np.linalg.norm(qstep.YXt2))
    P = np.zeros((C, d)) if P0 is None else np.array(P0, dtype=float)
    T = np.zeros((C, d))
    kappa = kappa0
    gap = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        P_prev = P
        Q = qstep(P, T, kappa)
        P = prox_l21(Q - T / kappa, lambda3 / kappa)
        diff = P - Q
        gap = float(np.linalg.norm(diff))
        dual = kappa * float(np.linalg.norm(P - P_prev)) / scale
        T = T + kappa * diff
        if gap < eps and dual < eps:
            converged = True
            break
        if gap > 10.0 * dual:
            kappa = min(rho * kappa, kappa_max)
    diag = SolveDiagnostics(it, gap, converged, l21_regression_objective(X, Y, P, lambda3))
    if return_state:
        return P, diag, IalmState(P, Q, T, kappa)
    return P, diag


# ---------------------------------------------------------------------------
# Simplex projection
# ---------------------------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{y : y >= 0, sum(y) = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("project_simplex received non-finite input")
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, n + 1) > 0)[0][-1]
    theta = css[k] / (k + 1.0)
    w = np.maximum(v - theta, 0.0)
    # absorb rounding so the entries sum to one
    s = w.sum()
    if s != 1.0:
        j = int(np.argmax(w))
        w[j] += 1.0 - s
    return w
