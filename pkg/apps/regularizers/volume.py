"""
Volume Regularizers

Volume measures vol(B) for the basis matrix, together with the quantities
the B-update needs from them.

REGULARIZERS:
- LogDet:    log det(B^T B + tau I)      (tau > 0 keeps the cost bounded below)
- Det:       det(B^T B)
- TraceDist: sum_{i<j} ||b_i - b_j||^2 = Tr(G B^T B), G = K I - 1 1^T

MAJORIZERS (quadratic surrogate Tr(F B^T B) used by the B-update):
- LogDet:    F = (B0^T B0 + tau I)^{-1}, from
             log det E <= Tr(F E) - log det F - K with equality at F = E^{-1}
- TraceDist: F = G (the regularizer is already quadratic)
- Det:       none; the B-update uses its gradient with Armijo backtracking

Every measure depends on B only through B^T B, so all are invariant under
B -> Q B for orthonormal Q.
"""

from dataclasses import dataclass
from typing import Optional

import logging
import numpy as np
from scipy import linalg as splin

from apps.core.exceptions import InvalidArgumentError, SingularMatrixError

logger = logging.getLogger(__name__)

LOG_DET = 'logdet'
DET = 'det'
TRACE_DIST = 'trace'
KINDS = (LOG_DET, DET, TRACE_DIST)

CONDITION_WARNING_LIMIT = 1e12


@dataclass(frozen=True)
class RegularizerKind:
    """
    Which volume measure to use.

    Attributes:
        name: 'logdet', 'det' or 'trace'
        tau: log-det offset (used by 'logdet' only; must be > 0)
    """
    name: str = LOG_DET
    tau: float = 1e-8

    def __post_init__(self):
        if self.name not in KINDS:
            raise InvalidArgumentError(f"Unknown regularizer {self.name!r}; expected one of {KINDS}")
        if self.name == LOG_DET and not self.tau > 0:
            raise InvalidArgumentError(f"LogDet regularizer needs tau > 0, got {self.tau}")

    @classmethod
    def log_det(cls, tau: float = 1e-8) -> 'RegularizerKind':
        return cls(LOG_DET, tau)

    @classmethod
    def det(cls) -> 'RegularizerKind':
        return cls(DET)

    @classmethod
    def trace_dist(cls) -> 'RegularizerKind':
        return cls(TRACE_DIST)

    @property
    def has_quadratic_majorizer(self) -> bool:
        return self.name != DET


@dataclass(frozen=True)
class MajorizerMatrix:
    """Symmetric PSD K x K matrix F of the surrogate Tr(F B^T B)."""
    F: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise InvalidArgumentError(f"Majorizer must be square, got shape {F.shape}")
        if np.max(np.abs(F - F.T), initial=0.0) > 1e-10:
            raise InvalidArgumentError("Majorizer matrix is not symmetric.")
        F = 0.5 * (F + F.T)
        if F.size and np.linalg.eigvalsh(F)[0] < -1e-10:
            raise InvalidArgumentError("Majorizer matrix is not positive semidefinite.")
        object.__setattr__(self, 'F', F)

    @classmethod
    def identity(cls, K: int) -> 'MajorizerMatrix':
        return cls(np.eye(K))


def gram(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    return B.T @ B


def trace_matrix(K: int) -> np.ndarray:
    """G = K I - 1 1^T (zero for K = 1)."""
    return K * np.eye(K) - np.ones((K, K))


def pairwise_distance_volume(B) -> float:
    """sum_{i<j} ||b_i - b_j||_2^2 evaluated by the double sum."""
    B = np.asarray(B, dtype=float)
    K = B.shape[1]
    total = 0.0
    for i in range(K - 1):
        for j in range(i + 1, K):
            diff = B[:, i] - B[:, j]
            total += float(diff @ diff)
    return total


def _log_det_spd(E: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(E)
    if sign <= 0:
        raise SingularMatrixError("log det of a matrix that is not positive definite")
    return float(value)


def vol_value(B, kind: RegularizerKind) -> float:
    """
    Value of the volume measure.

    Args:
        B: M x K basis
        kind: RegularizerKind

    Returns:
        float: log det(B^T B + tau I), det(B^T B) or Tr(G B^T B)
    """
    B = np.asarray(B, dtype=float)
    if not np.all(np.isfinite(B)):
        raise InvalidArgumentError("Basis contains non-finite entries.")
    BtB = gram(B)
    K = BtB.shape[0]
    if kind.name == LOG_DET:
        return _log_det_spd(BtB + kind.tau * np.eye(K))
    if kind.name == DET:
        return float(np.linalg.det(BtB))
    return float(np.trace(trace_matrix(K) @ BtB))


def majorizer(B_current, kind: RegularizerKind) -> Optional[MajorizerMatrix]:
    """
    Majorizer matrix F at the current basis (None for Det).

    Emits a conditioning warning when (B^T B + tau I) is badly conditioned.
    """
    B_current = np.asarray(B_current, dtype=float)
    if not np.all(np.isfinite(B_current)):
        raise InvalidArgumentError("Basis contains non-finite entries.")
    K = B_current.shape[1]

    if kind.name == DET:
        return None
    if kind.name == TRACE_DIST:
        return MajorizerMatrix(trace_matrix(K))

    E = gram(B_current) + kind.tau * np.eye(K)
    condition = np.linalg.cond(E)
    if condition > CONDITION_WARNING_LIMIT:
        logger.warning(
            f"[REGULARIZER] log-det majorizer is badly conditioned "
            f"(cond {condition:.3e}, tau {kind.tau:.1e})"
        )
    F = splin.solve(E, np.eye(K), assume_a='pos')
    return MajorizerMatrix(0.5 * (F + F.T))


def logdet_bound(F, E) -> float:
    """Tr(F E) - log det F - K, an upper bound on log det E for any F > 0."""
    F = F.F if isinstance(F, MajorizerMatrix) else np.asarray(F, dtype=float)
    E = np.asarray(E, dtype=float)
    return float(np.trace(F @ E)) - _log_det_spd(F) - F.shape[0]


def logdet_majorizer_value(B, F, tau: float) -> float:
    """
    Upper bound on log det(B^T B + tau I) from the majorizer F.

    Tight when F = (B^T B + tau I)^{-1}.
    """
    K = np.asarray(B).shape[1]
    return logdet_bound(F, gram(B) + tau * np.eye(K))


def det_gradient(B) -> np.ndarray:
    """
    Gradient of det(B^T B) with respect to B: 2 det(B^T B) B (B^T B)^{-1}.

    Raises:
        SingularMatrixError: B^T B is numerically singular
    """
    B = np.asarray(B, dtype=float)
    BtB = gram(B)
    if BtB.size == 0 or np.linalg.cond(BtB) > 1.0 / np.finfo(float).eps:
        raise SingularMatrixError("B^T B is singular; det gradient undefined through the inverse form.")
    try:
        B_inv = splin.solve(BtB, B.T, assume_a='pos').T
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return 2.0 * float(np.linalg.det(BtB)) * B_inv


def vol_gradient(B, kind: RegularizerKind) -> np.ndarray:
    """Gradient of vol(B) with respect to B."""
    B = np.asarray(B, dtype=float)
    K = B.shape[1]
    if kind.name == LOG_DET:
        E = gram(B) + kind.tau * np.eye(K)
        return 2.0 * splin.solve(E, B.T, assume_a='pos').T
    if kind.name == DET:
        return det_gradient(B)
    return 2.0 * B @ trace_matrix(K)
