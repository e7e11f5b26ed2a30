"""
Euclidean projection onto the unit simplex {u >= 0, 1^T u = 1}.

Sort-then-threshold: sort descending, find the last index rho with
u_rho - (sum_{j<=rho} u_j - 1) / rho > 0, shift by that threshold and clip.
O(K log K) per vector and exact.
"""

import numpy as np

from .exceptions import InvalidArgumentError


def project_simplex(v) -> np.ndarray:
    """
    Project a vector onto the unit simplex.

    Args:
        v: length-K real vector, K >= 1

    Returns:
        np.ndarray: argmin over the simplex of ||u - v||_2^2

    Raises:
        InvalidArgumentError: empty, non-1-D or non-finite input
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError(f"Expected a non-empty vector, got shape {v.shape}")
    return project_simplex_columns(v[:, None])[:, 0]


def project_simplex_columns(V) -> np.ndarray:
    """
    Project every column of a K x L matrix onto the unit simplex.

    Columns are processed independently; no quantity is shared across columns.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise InvalidArgumentError(f"Expected a K x L matrix with K >= 1, got shape {V.shape}")
    if not np.all(np.isfinite(V)):
        raise InvalidArgumentError("Cannot project non-finite values onto the simplex.")

    K, L = V.shape
    if L == 0:
        return V.copy()

    U = -np.sort(-V, axis=0)
    cumulative = np.cumsum(U, axis=0) - 1.0
    index = np.arange(1, K + 1, dtype=float)[:, None]
    # the condition holds on a prefix, so its length is rho
    rho = np.count_nonzero(U - cumulative / index > 0, axis=0)
    rho = np.maximum(rho, 1)
    theta = cumulative[rho - 1, np.arange(L)] / rho
    return np.maximum(V - theta, 0.0)
