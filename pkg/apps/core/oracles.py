"""
Exhaustive reference solvers used to cross-check the fast routines.

Both enumerate every support pattern of the simplex-constrained problem, solve
the equality-constrained subproblem on that support and keep the best feasible
candidate. Exponential in K; meant for K <= 10.
"""

from itertools import combinations

import numpy as np


def _supports(K: int):
    for size in range(1, K + 1):
        yield from combinations(range(K), size)


def simplex_projection_oracle(v) -> np.ndarray:
    """Projection onto the unit simplex by active-set enumeration."""
    v = np.asarray(v, dtype=float)
    K = v.size
    best, best_value = None, np.inf
    for support in _supports(K):
        idx = list(support)
        u = np.zeros(K)
        u[idx] = v[idx] - (v[idx].sum() - 1.0) / len(idx)
        if np.any(u[idx] < 0):
            continue
        value = float(np.sum((u - v) ** 2))
        if value < best_value:
            best, best_value = u, value
    return best


def simplex_least_squares_oracle(B, x) -> np.ndarray:
    """argmin over the unit simplex of 0.5 ||x - B c||^2 by support enumeration."""
    B = np.asarray(B, dtype=float)
    x = np.asarray(x, dtype=float)
    K = B.shape[1]
    best, best_value = None, np.inf
    for support in _supports(K):
        idx = list(support)
        Bs = B[:, idx]
        n = len(idx)
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = Bs.T @ Bs
        kkt[:n, n] = 1.0
        kkt[n, :n] = 1.0
        rhs = np.concatenate([Bs.T @ x, [1.0]])
        solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        c_s = solution[:n]
        if np.any(c_s < -1e-12) or abs(c_s.sum() - 1.0) > 1e-9:
            continue
        c = np.zeros(K)
        c[idx] = np.maximum(c_s, 0.0)
        c /= c.sum()
        value = 0.5 * float(np.sum((x - B @ c) ** 2))
        if value < best_value - 1e-15:
            best, best_value = c, value
    return best
