"""
Identifiability Certifier

Decides whether a coefficient matrix S (N x L, columns on the unit simplex)
is spread widely enough for the minimum-volume factorization to be unique.

The scattering radius is

    gamma = sup { r : {||s||_2 <= r} intersected with the simplex lies in conv(S) }

and the certificate is the strict inequality gamma > 1 / sqrt(N - 1).

Inside the hyperplane 1^T x = 1 every point satisfies
||x||^2 = 1/N + ||x - centroid||^2, so gamma = sqrt(d^2 + 1/N) where d is the
distance from the centroid (1/N) 1 to the nearest interior facet of conv(S).
Facets that lie on a simplex face {x_i = 0} do not limit the radius.

PIPELINE:
1. drop duplicate columns, then non-extreme columns (NNLS hull membership)
2. change to orthonormal coordinates of the hyperplane, centred at the centroid
3. enumerate every (N-1)-subset of extreme points as a candidate facet
4. gamma from the nearest interior facet
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from apps.core.exceptions import (
    DegenerateInputError, InvalidArgumentError, UnsupportedDimensionError,
)
from apps.core.matrices import simplex_violation

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
MAX_DIMENSION = 5
MAX_EXTREME_POINTS = 60
# Weight of the sum-to-one row appended to the nonnegative least-squares system.
SUM_ROW_WEIGHT = 1e3


@dataclass(frozen=True)
class CoeffCloud:
    """
    Coefficient columns to certify.

    Attributes:
        S: N x L matrix, columns on the unit simplex
        tolerance: feasibility / extremeness tolerance
    """
    S: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        S = np.array(self.S, dtype=float, copy=True)
        if S.ndim != 2:
            raise InvalidArgumentError(f"Coefficient cloud must be 2-D, got shape {S.shape}")
        if S.shape[0] < 2:
            raise InvalidArgumentError(f"Coefficient cloud needs N >= 2, got N={S.shape[0]}")
        if not np.all(np.isfinite(S)):
            raise InvalidArgumentError("Coefficient cloud contains non-finite entries.")
        violation = simplex_violation(S)
        if violation > self.tolerance:
            raise InvalidArgumentError(
                f"Coefficient columns are not on the unit simplex (violation {violation:.3e})."
            )
        S.setflags(write=False)
        object.__setattr__(self, 'S', S)

    @property
    def N(self) -> int:
        return self.S.shape[0]

    @property
    def L(self) -> int:
        return self.S.shape[1]

    @property
    def centroid(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)


@dataclass(frozen=True)
class Facet:
    """
    Facet of conv(S) within the hyperplane 1^T x = 1.

    normal is a unit vector orthogonal to 1 pointing out of conv(S); points x
    of the hyperplane with normal @ x <= offset are on the hull side.
    """
    normal: np.ndarray
    offset: float
    vertices: Tuple[int, ...] = field(default=())


@dataclass
class ScatterReport:
    gamma: float
    threshold: float
    sufficiently_scattered: bool
    centroid_distance: float
    interior_facet_count: int
    extreme_point_count: int

    def to_dict(self) -> dict:
        return {
            'gamma': self.gamma,
            'threshold': self.threshold,
            'sufficiently_scattered': self.sufficiently_scattered,
            'centroid_distance': self.centroid_distance,
            'interior_facet_count': self.interior_facet_count,
            'extreme_point_count': self.extreme_point_count,
        }


def hull_residual(points: np.ndarray, target: np.ndarray) -> float:
    """
    Distance-like residual of target from conv(points columns).

    Nonnegative least squares with an appended, heavily weighted sum-to-one
    row; zero (to rounding) exactly when target is a convex combination.
    """
    if points.shape[1] == 0:
        return float(np.linalg.norm(target))
    system = np.vstack([points, SUM_ROW_WEIGHT * np.ones((1, points.shape[1]))])
    rhs = np.concatenate([target, [SUM_ROW_WEIGHT]])
    theta, _ = nnls(system, rhs)
    return float(np.linalg.norm(target - points @ theta))


def _unique_columns(S: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of every distinct column."""
    _, first = np.unique(S.T, axis=0, return_index=True)
    return np.sort(first)


def extreme_points(cloud: CoeffCloud) -> List[int]:
    """
    Indices of columns that are not convex combinations of the others.

    Duplicated columns are reported once (first occurrence).
    """
    S = cloud.S
    candidates = _unique_columns(S)
    extreme = []
    for position, index in enumerate(candidates):
        others = np.delete(candidates, position)
        if hull_residual(S[:, others], S[:, index]) > cloud.tolerance:
            extreme.append(int(index))
    return extreme


def hyperplane_basis(N: int) -> np.ndarray:
    """N x (N-1) orthonormal basis of {y : 1^T y = 0}."""
    return null_space(np.ones((1, N)))


def contains_centroid(cloud: CoeffCloud) -> bool:
    """True when (1/N) 1 lies in conv(S) within tolerance."""
    return hull_residual(cloud.S, cloud.centroid) <= cloud.tolerance


def facet_distance(facet: Facet, point) -> float:
    """Distance from a hyperplane point to the facet's affine hull."""
    return abs(float(facet.normal @ np.asarray(point, dtype=float)) - facet.offset)


def _check_dimension(cloud: CoeffCloud) -> None:
    if cloud.N > MAX_DIMENSION:
        raise UnsupportedDimensionError(
            f"Facet enumeration supports N <= {MAX_DIMENSION}, got N={cloud.N}"
        )


def _candidate_facets(cloud: CoeffCloud, extreme: List[int]) -> List[Facet]:
    """All facets of conv(S), boundary ones included, deduplicated."""
    N, tol = cloud.N, cloud.tolerance
    U = hyperplane_basis(N)
    Y = (cloud.S[:, extreme] - cloud.centroid[:, None]).T @ U

    spread = Y[1:] - Y[0]
    if len(extreme) < N or np.linalg.matrix_rank(spread, tol=tol) < N - 1:
        raise DegenerateInputError(
            f"Extreme points do not span the {N - 1}-dimensional simplex hyperplane"
        )

    facets, seen = [], set()
    for subset in combinations(range(len(extreme)), N - 1):
        P = Y[list(subset)]
        directions = null_space(P[1:] - P[0]) if N > 2 else np.ones((1, 1))
        if directions.shape[1] != 1:
            continue
        n = directions[:, 0]
        b = float(n @ P[0])
        side = Y @ n - b
        if np.all(side <= tol):
            pass
        elif np.all(side >= -tol):
            n, b = -n, -b
        else:
            continue
        key = (tuple(np.round(n, 9)), round(b, 9))
        if key in seen:
            continue
        seen.add(key)
        on_facet = tuple(int(extreme[i]) for i in np.flatnonzero(np.abs(Y @ n - b) <= tol))
        facets.append(Facet(normal=U @ n, offset=b, vertices=on_facet))
    return facets


def _on_simplex_boundary(cloud: CoeffCloud, facet: Facet) -> bool:
    points = cloud.S[:, list(facet.vertices)]
    return bool(np.any(np.all(points <= cloud.tolerance, axis=1)))


def interior_facets(cloud: CoeffCloud, extreme: Optional[List[int]] = None) -> List[Facet]:
    """
    Facets of conv(S) that do not lie on a simplex face {x_i = 0}.

    extreme: precomputed extreme_points(cloud), if the caller already has them

    Raises:
        UnsupportedDimensionError: N > 5, or more than 60 extreme points
        DegenerateInputError: the hull is lower-dimensional than the simplex
    """
    _check_dimension(cloud)
    if extreme is None:
        extreme = extreme_points(cloud)
    if len(extreme) > MAX_EXTREME_POINTS:
        raise UnsupportedDimensionError(
            f"Facet enumeration supports at most {MAX_EXTREME_POINTS} extreme points, got {len(extreme)}"
        )
    facets = _candidate_facets(cloud, extreme)
    return [facet for facet in facets if not _on_simplex_boundary(cloud, facet)]


def scattering_radius(cloud: CoeffCloud) -> ScatterReport:
    """
    Scattering radius and the sufficiently-scattered verdict.

    A centroid outside conv(S) yields gamma = 0 and a negative
    centroid_distance (minus its distance to the violated facet).
    """
    _check_dimension(cloud)
    N = cloud.N
    threshold = 1.0 / np.sqrt(N - 1)
    extreme = extreme_points(cloud)
    facets = interior_facets(cloud, extreme)

    offsets = [facet.offset for facet in facets]
    if offsets and min(offsets) < -cloud.tolerance:
        gamma, d = 0.0, float(min(offsets))
    elif not offsets:
        gamma = d = float('inf')
    else:
        d = float(max(min(offsets), 0.0))
        gamma = float(np.sqrt(d * d + 1.0 / N))

    report = ScatterReport(
        gamma=gamma,
        threshold=float(threshold),
        sufficiently_scattered=bool(gamma > threshold),
        centroid_distance=d,
        interior_facet_count=len(facets),
        extreme_point_count=len(extreme),
    )
    logger.info(
        f"[SCATTER] N={N} L={cloud.L}: gamma={report.gamma:.6g} threshold={report.threshold:.6g} "
        f"scattered={report.sufficiently_scattered} facets={report.interior_facet_count}"
    )
    return report
