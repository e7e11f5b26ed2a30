"""
Block Updates for the Robust Volume-Minimization Solve

The cost being minimized is

    v(B, C) = sum_l 1/2 (||x_l - B c_l||^2 + eps)^(p/2) + (lambda/2) vol(B)

with every coefficient column c_l on the unit simplex.

Each block is updated by minimizing (or decreasing) a majorizer:
- fit term: (r^2 + eps)^(p/2) <= w r^2 + phi_p(w), tight at
  w = (p/2) (r^2 + eps)^((p-2)/2)
- C block: one projected-gradient step on the weighted quadratic, step 1/L
  with L >= ||B^T B||_2 (the per-column weight cancels from the step)
- B block: closed form B = X W C^T (C W C^T + lambda F)^{-1}, or one
  projected-gradient step when B must stay nonnegative; the det volume has no
  quadratic majorizer and takes an Armijo-backtracked gradient step

All functions here are stateless apart from update_C/update_B recording the
step constants they used on the state they are given.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg as splin

from apps.core.exceptions import SingularMatrixError
from apps.core.linalg import psd_norm_bound, spectral_bound
from apps.core.matrices import MatrixLike, as_array, check_simplex_columns
from apps.core.simplex import project_simplex_columns
from apps.regularizers.volume import (
    DET, LOG_DET, MajorizerMatrix, RegularizerKind, det_gradient, logdet_majorizer_value,
    majorizer, vol_gradient, vol_value,
)

from .config import LAGGED, SolverConfig, SolverState

logger = logging.getLogger(__name__)

OBJECTIVE_FEASIBILITY_TOL = 1e-9
CONDITION_WARNING_LIMIT = 1e12
ARMIJO_SIGMA = 1e-4
ARMIJO_MAX_HALVINGS = 30

# Squared residuals are floored here when eps = 0 and p < 2 so weights stay finite.
_RESIDUAL_FLOOR = np.finfo(float).tiny


def _warn_once(state: Optional[SolverState], key: str, message: str) -> None:
    if state is not None:
        if key in state.warned:
            return
        state.warned.add(key)
    logger.warning(message)


def residual_norms_sq(X: MatrixLike, B, C) -> np.ndarray:
    """||x_l - B c_l||^2 for every column l."""
    R = as_array(X) - np.asarray(B) @ np.asarray(C)
    return np.sum(R * R, axis=0)


def _fit_value(r2: np.ndarray, p: float, epsilon: float) -> float:
    return 0.5 * float(np.sum((r2 + epsilon) ** (p / 2.0)))


def _volume_term(B, config: SolverConfig) -> float:
    if config.lambda_ == 0:
        return 0.0
    return 0.5 * config.lambda_ * vol_value(B, config.regularizer_kind)


def objective(X: MatrixLike, B, C, config: SolverConfig) -> float:
    """
    Cost v(B, C).

    Raises:
        InvalidArgumentError: a column of C is off the unit simplex
    """
    check_simplex_columns(C, OBJECTIVE_FEASIBILITY_TOL)
    return _fit_value(residual_norms_sq(X, B, C), config.p, config.epsilon) + _volume_term(B, config)


def update_weights(X: MatrixLike, B, C, p: float, epsilon: float) -> np.ndarray:
    """
    Per-column weights w_l = (p/2) (||x_l - B c_l||^2 + eps)^((p-2)/2).

    Small weights flag columns that fit badly (likely outliers).
    """
    r2 = residual_norms_sq(X, B, C) + epsilon
    if p < 2.0:
        r2 = np.maximum(r2, _RESIDUAL_FLOOR)
    return (p / 2.0) * r2 ** ((p - 2.0) / 2.0)


def phi_p(w, p: float, epsilon: float) -> np.ndarray:
    """
    Conjugate term of the fit majorizer: ((2-p)/2) (2w/p)^(p/(p-2)) + eps w.

    min over w > 0 of w r^2 + phi_p(w) equals (r^2 + eps)^(p/2).
    """
    w = np.asarray(w, dtype=float)
    if p == 2.0:
        return epsilon * w
    return ((2.0 - p) / 2.0) * (2.0 * w / p) ** (p / (p - 2.0)) + epsilon * w


def fit_majorizer_value(X: MatrixLike, B, C, weights, p: float, epsilon: float) -> float:
    """1/2 sum_l (w_l r_l^2 + phi_p(w_l)); >= the fit term for any positive weights."""
    r2 = residual_norms_sq(X, B, C)
    return 0.5 * float(np.sum(weights * r2 + phi_p(weights, p, epsilon)))


def coeff_majorizer_value(X: MatrixLike, B, C, anchor, step_L: float, weights,
                          config: SolverConfig) -> float:
    """
    Surrogate minimized by the C-update, expanded at anchor.

    Each r_l^2 is replaced by its quadratic upper bound about the anchor
    column, valid whenever step_L >= ||B^T B||_2.
    """
    X = as_array(X)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    R = B @ anchor - X
    grad = B.T @ R
    D = C - anchor
    bound = np.sum(R * R, axis=0) + 2.0 * np.sum(grad * D, axis=0) + step_L * np.sum(D * D, axis=0)
    fit = 0.5 * float(np.sum(weights * bound + phi_p(weights, config.p, config.epsilon)))
    return fit + _volume_term(B, config)


def basis_majorizer_value(X: MatrixLike, B, C, weights, F, config: SolverConfig) -> float:
    """Surrogate minimized by the B-update (exact volume for det)."""
    fit = fit_majorizer_value(X, B, C, weights, config.p, config.epsilon)
    if config.lambda_ == 0:
        return fit
    kind = config.regularizer_kind
    if kind.name == LOG_DET:
        volume = logdet_majorizer_value(B, F, kind.tau)
    else:
        volume = vol_value(B, kind)
    return fit + 0.5 * config.lambda_ * volume


def next_q(q: float) -> float:
    """Momentum sequence q_{t+1} = (1 + sqrt(1 + 4 q_t^2)) / 2."""
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * q * q))


def projected_gradient_step(X: MatrixLike, B, Z, step_L: float) -> np.ndarray:
    """project_simplex(z - (1/L) B^T (B z - x)) for every column z of Z."""
    Z = np.asarray(Z, dtype=float)
    if step_L <= 0:
        return project_simplex_columns(Z)
    B = np.asarray(B, dtype=float)
    grad = B.T @ (B @ Z - as_array(X))
    return project_simplex_columns(Z - grad / step_L)


def extrapolated_point(state: SolverState) -> np.ndarray:
    C = state.model.coeffs
    beta = (state.q - 1.0) / next_q(state.q)
    return C + beta * (C - state.C_prev)


def update_C(X: MatrixLike, state: SolverState, config: SolverConfig) -> np.ndarray:
    """
    One projected-gradient step per coefficient column.

    Columns are updated independently; with extrapolation the gradient is
    taken at the momentum point built from the previous two iterates.
    """
    B = state.model.basis
    state.step_L = spectral_bound(B, delta=config.safety_delta)
    Z = extrapolated_point(state) if config.extrapolate else state.model.coeffs
    return projected_gradient_step(X, B, Z, state.step_L)


def project_basis(B: np.ndarray, config: SolverConfig) -> np.ndarray:
    return np.maximum(B, 0.0) if config.nonnegative else B


def solve_basis_system(XWCt: np.ndarray, H: np.ndarray, state: Optional[SolverState] = None) -> np.ndarray:
    """
    Solve B H = XWCt for symmetric PSD H.

    Uses a Cholesky factorization; a singular or badly conditioned H falls
    back to the pseudo-inverse with a warning (once per solve when a state
    is given).
    """
    H = 0.5 * (H + H.T)
    condition = np.linalg.cond(H)
    if np.isfinite(condition) and condition <= CONDITION_WARNING_LIMIT:
        try:
            factor = splin.cho_factor(H)
            return splin.cho_solve(factor, XWCt.T).T
        except np.linalg.LinAlgError:
            pass
    _warn_once(
        state, 'ill_conditioned_basis',
        f"[SOLVER] basis system is ill-conditioned (cond {condition:.3e}); "
        f"using the pseudo-inverse",
    )
    return XWCt @ splin.pinvh(H)


def _weighted_products(X: np.ndarray, C: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    CW = C * weights
    return X @ CW.T, CW @ C.T


def update_B(X: MatrixLike, state: SolverState, config: SolverConfig) -> np.ndarray:
    """
    Basis update against the current weights and majorizer.

    - unconstrained, logdet/trace: closed-form minimizer of the surrogate
    - nonnegative, logdet/trace: one projected-gradient step with step 1/mu,
      mu >= ||C W C^T + lambda F||_2
    - det: projected gradient step with Armijo backtracking
    """
    X = as_array(X)
    B = state.model.basis
    C = state.model.coeffs
    XWCt, CWCt = _weighted_products(X, C, state.weights)
    kind = config.regularizer_kind

    if kind.name == DET:
        return _det_basis_step(X, B, C, state, config, XWCt, CWCt)

    F = state.F.F if state.F is not None else majorizer(B, kind).F
    H = CWCt + config.lambda_ * F
    if not config.nonnegative:
        return solve_basis_system(XWCt, H, state)

    state.step_mu = psd_norm_bound(H, delta=config.safety_delta)
    if state.step_mu <= 0:
        return B.copy()
    grad = B @ H - XWCt
    return project_basis(B - grad / state.step_mu, config)


def _det_basis_step(X, B, C, state, config, XWCt, CWCt) -> np.ndarray:
    weights = state.weights
    det_kind = RegularizerKind.det()

    def surrogate(candidate):
        R = X - candidate @ C
        value = 0.5 * float(np.sum(weights * np.sum(R * R, axis=0)))
        if config.lambda_:
            value += 0.5 * config.lambda_ * vol_value(candidate, det_kind)
        return value

    try:
        volume_grad = det_gradient(B)
    except SingularMatrixError:
        _warn_once(state, 'singular_det', "[SOLVER] B^T B is singular; det step follows the log-det direction")
        volume_grad = vol_gradient(B, RegularizerKind.log_det(config.tau))
    grad = B @ CWCt - XWCt + 0.5 * config.lambda_ * volume_grad

    state.step_mu = psd_norm_bound(CWCt, delta=config.safety_delta)
    step = 1.0 / state.step_mu if state.step_mu > 0 else 1.0
    base = surrogate(B)
    for _ in range(ARMIJO_MAX_HALVINGS):
        candidate = project_basis(B - step * grad, config)
        predicted = float(np.sum(grad * (candidate - B)))
        value = surrogate(candidate)
        if value <= base and value <= base + ARMIJO_SIGMA * min(predicted, 0.0):
            return candidate
        step *= 0.5
    return B.copy()


def stationarity_gap(X: MatrixLike, B, C, config: SolverConfig, weights=None) -> Tuple[float, float]:
    """
    Projected-gradient norms (C block, B block) of v at (B, C).

    Both are zero exactly at a stationary point of the constrained problem.
    """
    X = as_array(X)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    if weights is None:
        weights = update_weights(X, B, C, config.p, config.epsilon)
    R = B @ C - X
    grad_C = (B.T @ R) * weights
    gap_C = float(np.linalg.norm(C - project_simplex_columns(C - grad_C)))
    grad_B = (R * weights) @ C.T
    if config.lambda_:
        grad_B = grad_B + 0.5 * config.lambda_ * vol_gradient(B, config.regularizer_kind)
    gap_B = float(np.linalg.norm(B - project_basis(B - grad_B, config)))
    return gap_C, gap_B


def outlier_scores(weights) -> np.ndarray:
    """1/w scaled to [0, 1]; all zeros when every weight is equal."""
    inverse = 1.0 / np.asarray(weights, dtype=float)
    spread = float(inverse.max() - inverse.min())
    if spread <= 0:
        return np.zeros_like(inverse)
    return (inverse - inverse.min()) / spread


def initial_majorizer(B, config: SolverConfig):
    """F at B for the refresh schedule, identity for the lagged one (None for det)."""
    kind = config.regularizer_kind
    if kind.name == DET:
        return None
    if kind.name == LOG_DET and config.weight_schedule == LAGGED:
        return MajorizerMatrix.identity(np.asarray(B).shape[1])
    return majorizer(B, kind)
