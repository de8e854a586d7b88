"""Reference solvers used only by the tests.

Each one solves its problem by a route unrelated to the package code:
enumeration of supports, generic quasi-Newton minimization, or plain
accelerated proximal gradient run to tight tolerance.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize


def nonneg_lasso_enumeration(Z, y, lam):
    """Exact minimizer of ||y - Z a||^2 + lam * sum(a), a >= 0, by trying
    every support and solving its equality-constrained least squares.

    Singular supports are skipped: some minimizer always has linearly
    independent active columns, so it is still among the candidates.
    """
    G = Z.shape[1]
    H = Z.T @ Z
    b = Z.T @ y
    best, best_f = np.zeros(G), float(y @ y)
    for k in range(1, G + 1):
        for S in itertools.combinations(range(G), k):
            S = list(S)
            try:
                sol = np.linalg.solve(H[np.ix_(S, S)], b[S] - lam / 2.0)
            except np.linalg.LinAlgError:
                continue
            if np.any(sol < 0):
                continue
            a = np.zeros(G)
            a[S] = sol
            r = y - Z @ a
            f = float(r @ r + lam * a.sum())
            if f < best_f:
                best, best_f = a, f
    return best, best_f


def prox_objective(P, M, t):
    return t * float(np.sum(np.linalg.norm(P, axis=0))) + 0.5 * float(np.sum((P - M) ** 2))


def prox_l21_numeric(M, t):
    """Column-by-column BFGS on the prox objective from several starts, with
    the zero column kept as a candidate (the objective is not smooth there)."""
    C, d = M.shape
    out = np.zeros_like(M)
    rng = np.random.default_rng(0)
    for j in range(d):
        m = M[:, j]

        def f(p):
            return t * np.linalg.norm(p) + 0.5 * np.sum((p - m) ** 2)

        def g(p):
            n = np.linalg.norm(p)
            return (t * p / n if n > 0 else 0 * p) + (p - m)

        best, fb = np.zeros(C), f(np.zeros(C))
        for x0 in (m, np.full(C, 1e-3), rng.standard_normal(C)):
            r = minimize(f, x0, jac=g, method="BFGS", options={"gtol": 1e-12})
            if r.fun < fb:
                best, fb = r.x, r.fun
        out[:, j] = best
    return out


def l21_regression_pg(X, Y, lam, iters=30000):
    """FISTA with gradient-based restart on ||Y - P X||_F^2 + lam * ||P||_{2,1}."""
    L = 2.0 * np.linalg.norm(X, 2) ** 2
    C, d = Y.shape[0], X.shape[0]
    P = np.zeros((C, d))
    Zm = P.copy()
    t = 1.0
    if L == 0:
        return P

    def shrink(M, thr):
        n = np.linalg.norm(M, axis=0)
        s = np.where(n > thr, 1.0 - thr / np.where(n > 0, n, 1.0), 0.0)
        return M * s

    for _ in range(iters):
        grad = -2.0 * (Y - Zm @ X) @ X.T
        Pn = shrink(Zm - grad / L, lam / L)
        if np.sum((Zm - Pn) * (Pn - P)) > 0:
            t = 1.0
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Zm = Pn + ((t - 1.0) / tn) * (Pn - P)
        P, t = Pn, tn
    return P


def l21_regression_value(X, Y, P, lam):
    R = Y - P @ X
    return float(np.sum(R * R) + lam * np.sum(np.linalg.norm(P, axis=0)))


_SUBSETS: dict[int, np.ndarray] = {}


def simplex_projection_bruteforce(V):
    """Project each row of ``V`` onto the simplex by enumerating every support
    and keeping the nearest feasible candidate (the KKT points of the QP)."""
    V = np.atleast_2d(V)
    C = V.shape[1]
    if C not in _SUBSETS:
        _SUBSETS[C] = np.array(
            [[(k >> i) & 1 for i in range(C)] for k in range(1, 2**C)], dtype=bool
        )
    masks = _SUBSETS[C]
    sizes = masks.sum(axis=1)
    out = np.empty_like(V)
    for r, v in enumerate(V):
        shift = (masks @ v - 1.0) / sizes
        cand = np.where(masks, v[None, :] - shift[:, None], 0.0)
        feasible = np.all(cand >= -1e-15, axis=1)
        dist = np.sum((cand - v) ** 2, axis=1)
        dist[~feasible] = np.inf
        out[r] = cand[np.argmin(dist)]
    return out


def aktlr_objective_reference(alpha, blocks, Xs, Xt, Ys, dims, l1, l2, l3):
    """Straight transcription of the training objective with explicit loops."""
    Ns, Nt = Xs.shape[1], Xt.shape[1]
    C = Ys.shape[0]
    fit = Ys.copy()
    gap = np.zeros(C)
    start = 0
    for a, P, d in zip(alpha, blocks, dims):
        rows = slice(start, start + d)
        start += d
        dx = Xs[rows].sum(axis=1) / Ns - Xt[rows].sum(axis=1) / Nt
        for j in range(Ns):
            fit[:, j] -= a * (P @ Xs[rows, j])
        gap += a * (P @ dx)
    total = 0.0
    for j in range(Ns):
        total += float(fit[:, j] @ fit[:, j])
    total += l1 * float(gap @ gap) + l2 * float(np.sum(np.abs(alpha)))
    for P in blocks:
        for k in range(P.shape[1]):
            total += l3 * float(np.sqrt(P[:, k] @ P[:, k]))
    return total
