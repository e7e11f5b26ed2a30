"""
Dense matrix containers.

- DataMatrix: the measured data X (M features x L samples)
- FactorModel: a factorization X ~ B C whose coefficient columns live on the
  unit simplex {c >= 0, 1^T c = 1}

Ground-truth factors (A, S) use the same FactorModel shape.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import InvalidArgumentError

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class DataMatrix:
    """
    Dense real data matrix, one sample per column.

    Attributes:
        values: M x L float array (features x samples)
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidArgumentError(
                f"Data matrix must be 2-D with at least one row and column, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Data matrix contains non-finite entries.")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def column(self, index: int) -> np.ndarray:
        """Return sample x[index]."""
        return self.values[:, index]


MatrixLike = Union[DataMatrix, np.ndarray]


def as_array(matrix: MatrixLike) -> np.ndarray:
    """Return the float array behind a DataMatrix or array-like."""
    if isinstance(matrix, DataMatrix):
        return matrix.values
    return np.asarray(matrix, dtype=float)


def simplex_violation(coeffs: np.ndarray) -> float:
    """Largest violation of nonnegativity or sum-to-one over all columns."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        return 0.0
    negativity = float(np.max(np.maximum(-coeffs, 0.0)))
    sum_error = float(np.max(np.abs(coeffs.sum(axis=0) - 1.0)))
    return max(negativity, sum_error)


def check_simplex_columns(coeffs: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    """Raise InvalidArgumentError unless every column lies on the unit simplex."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise InvalidArgumentError("Coefficient matrix contains non-finite entries.")
    violation = simplex_violation(coeffs)
    if violation > tol:
        raise InvalidArgumentError(
            f"Coefficient columns are not on the unit simplex (violation {violation:.3e} > {tol:.1e})."
        )


@dataclass
class FactorModel:
    """
    Factor pair (B, C) with X ~ B C.

    Attributes:
        basis: M x K matrix B (endmembers)
        coeffs: K x L matrix C (abundances), columns on the unit simplex
    """
    basis: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.basis.ndim != 2 or self.coeffs.ndim != 2:
            raise InvalidArgumentError("Basis and coefficients must both be 2-D.")
        if self.basis.shape[1] != self.coeffs.shape[0]:
            raise InvalidArgumentError(
                f"Inner dimensions disagree: basis {self.basis.shape}, coeffs {self.coeffs.shape}"
            )

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def n_samples(self) -> int:
        return self.coeffs.shape[1]

    def is_feasible(self, tol: float = SIMPLEX_TOL) -> bool:
        return bool(np.all(np.isfinite(self.coeffs))) and simplex_violation(self.coeffs) <= tol

    def validate(self, tol: float = SIMPLEX_TOL) -> None:
        check_simplex_columns(self.coeffs, tol)
        if self.rank > min(self.basis.shape[0], self.n_samples):
            raise InvalidArgumentError(
                f"K={self.rank} exceeds min(M, L)={min(self.basis.shape[0], self.n_samples)}"
            )

    def reconstruct(self) -> np.ndarray:
        return self.basis @ self.coeffs

    def copy(self) -> 'FactorModel':
        return FactorModel(self.basis.copy(), self.coeffs.copy())
