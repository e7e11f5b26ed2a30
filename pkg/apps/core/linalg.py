"""
Certified spectral-norm bounds used as step-size constants.

The projected-gradient steps need L >= ||B^T B||_2 (and mu >= the largest
eigenvalue of the B-subproblem curvature). Power iteration alone approaches
that value from below, so the estimate is inflated by (1 + delta), confirmed
with a Cholesky test of (bound * I - H), and otherwise replaced by the trace,
which always dominates the top eigenvalue of a PSD matrix.
"""

import numpy as np

from .conf import rvolmin_setting
from .exceptions import InvalidArgumentError
from .rng import make_generator

# Fixed start vector stream; a deterministic Gaussian start is orthogonal to
# the top eigenvector with probability zero.
_START_SEED = 20160418


def _start_vector(size: int) -> np.ndarray:
    x = make_generator(_START_SEED).standard_normal(size)
    return x / np.linalg.norm(x)


def psd_norm_bound(H, delta: float = None, n_iter: int = None) -> float:
    """
    Upper bound on the largest eigenvalue of a symmetric PSD matrix.

    Returns min(trace(H), (1 + delta) * power-iteration estimate).
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidArgumentError(f"Expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InvalidArgumentError("Cannot bound the norm of a non-finite matrix.")
    delta = rvolmin_setting('SAFETY_DELTA') if delta is None else delta
    n_iter = rvolmin_setting('POWER_ITERATIONS') if n_iter is None else n_iter

    trace = float(np.trace(H))
    if trace <= 0.0:
        return 0.0

    x = _start_vector(H.shape[0])
    for _ in range(n_iter):
        y = H @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            break
        x = y / norm
    estimate = (1.0 + delta) * float(x @ H @ x)
    if estimate >= trace or not _dominates(H, estimate):
        return trace
    return estimate


def _dominates(H: np.ndarray, value: float) -> bool:
    """True when value * I - H is positive definite, i.e. value > lambda_max(H)."""
    try:
        np.linalg.cholesky(value * np.eye(H.shape[0]) - H)
    except np.linalg.LinAlgError:
        return False
    return True


def spectral_bound(B, delta: float = None, n_iter: int = None) -> float:
    """
    Certified upper bound on ||B^T B||_2 (= sigma_max(B)^2).

    Args:
        B: M x K matrix
        delta: safety inflation of the power-iteration estimate
        n_iter: number of power iterations

    Returns:
        float: bound with sigma_max^2 <= bound <= ||B||_F^2; 0 for an all-zero B
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise InvalidArgumentError(f"Expected a matrix, got shape {B.shape}")
    return psd_norm_bound(B.T @ B, delta=delta, n_iter=n_iter)
