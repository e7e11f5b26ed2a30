"""
Evaluation metrics.

- permutation_matched_mse: column-normalized, permutation-matched basis error
- snr_db / sor_db: empirical signal-to-noise and signal-to-outlier ratios

MSE(A, A_hat) = min_pi (1/K) sum_k || a_k/||a_k|| - a_hat_{pi_k}/||a_hat_{pi_k}|| ||^2
is reported both linear and in dB (10 log10), floored so reports never hold -inf.
"""

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .conf import rvolmin_setting
from .exceptions import InvalidArgumentError
from .matrices import MatrixLike, as_array


@dataclass(frozen=True)
class MetricConfig:
    """Report settings for the MSE metric. Columns are always scaled to unit l2 norm."""
    mse_floor_db: float = field(default_factory=lambda: rvolmin_setting('MSE_FLOOR_DB'))
    normalization: str = 'unit_l2'

    def __post_init__(self):
        if not self.mse_floor_db < 0:
            raise InvalidArgumentError(f"mse_floor_db must be negative, got {self.mse_floor_db}")


def _unit_columns(A: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise InvalidArgumentError(f"{name} has an all-zero column.")
    return A / norms


def pairwise_column_cost(A_true, A_est) -> np.ndarray:
    """K x K matrix of ||a_i/||a_i|| - a_hat_j/||a_hat_j|| ||^2."""
    A_true = as_array(A_true)
    A_est = as_array(A_est)
    if A_true.ndim != 2 or A_true.shape != A_est.shape:
        raise InvalidArgumentError(
            f"Shape mismatch: true {A_true.shape} vs estimate {A_est.shape}"
        )
    U = _unit_columns(A_true, 'A_true')
    V = _unit_columns(A_est, 'A_est')
    diff = U[:, :, None] - V[:, None, :]
    return np.sum(diff * diff, axis=0)


def to_db(value: float, floor_db: float) -> float:
    if value <= 0:
        return floor_db
    return max(10.0 * np.log10(value), floor_db)


def permutation_matched_mse(A_true, A_est, config: MetricConfig = None) -> Tuple[float, float]:
    """
    Permutation-matched MSE between true and estimated bases.

    The objective is a sum of per-pair costs, so the optimal assignment on the
    K x K cost matrix gives the exact minimum over permutations.

    Returns:
        (mse_linear, mse_db)
    """
    config = config or MetricConfig()
    cost = pairwise_column_cost(A_true, A_est)
    rows, cols = linear_sum_assignment(cost)
    mse_linear = float(cost[rows, cols].sum() / cost.shape[0])
    return mse_linear, to_db(mse_linear, config.mse_floor_db)


def brute_force_matched_mse(A_true, A_est) -> float:
    """Exhaustive minimum over all permutations; exact but only for K <= 8."""
    cost = pairwise_column_cost(A_true, A_est)
    K = cost.shape[0]
    if K > 8:
        raise InvalidArgumentError(f"Brute-force matching is limited to K <= 8, got {K}")
    best = min(cost[np.arange(K), list(perm)].sum() for perm in permutations(range(K)))
    return float(best / K)


def mean_column_power(matrix: MatrixLike, columns: Iterable[int] = None) -> float:
    """Empirical mean of ||m[l]||_2^2 over the selected (default: all) columns."""
    values = as_array(matrix)
    if columns is not None:
        values = values[:, list(columns)]
    if values.shape[1] == 0:
        raise InvalidArgumentError("Cannot average power over an empty column set.")
    return float(np.mean(np.sum(values * values, axis=0)))


def _ratio_db(signal_power: float, other_power: float) -> float:
    if other_power == 0:
        return float('inf')
    return float(10.0 * np.log10(signal_power / other_power))


def snr_db(clean: MatrixLike, noise: MatrixLike) -> float:
    """
    Signal-to-noise ratio in dB with empirical means over all L columns.

    Returns +inf when the noise power is zero.
    """
    clean = as_array(clean)
    noise = as_array(noise)
    if clean.shape != noise.shape:
        raise InvalidArgumentError(f"Shape mismatch: clean {clean.shape} vs noise {noise.shape}")
    return _ratio_db(mean_column_power(clean), mean_column_power(noise))


def sor_db(clean: MatrixLike, outliers: MatrixLike, outlier_indices: Iterable[int]) -> float:
    """
    Signal-to-outlier ratio in dB.

    Signal power averages over all L clean columns; outlier power averages over
    the columns of `outliers` listed in `outlier_indices` (the outlier set).

    Returns +inf when the outlier power is zero.
    """
    clean = as_array(clean)
    outliers = as_array(outliers)
    indices = sorted(set(int(i) for i in outlier_indices))
    if not indices:
        raise InvalidArgumentError("SOR needs a non-empty outlier index set.")
    if clean.shape[0] != outliers.shape[0]:
        raise InvalidArgumentError(
            f"Row mismatch: clean {clean.shape} vs outliers {outliers.shape}"
        )
    return _ratio_db(mean_column_power(clean), mean_column_power(outliers, indices))
