"""
Robust Volume-Minimization Service

This module runs the outer block-coordinate-descent loop:
- C-update (projected gradient, optionally at an extrapolated point)
- B-update (closed form or projected gradient)
- weight refresh w_l from the current residuals
- majorizer refresh F from the current basis

and the initialization strategies that seed it.
"""

import logging
import math
import time
from typing import Callable, Optional, Union

import numpy as np

from apps.core.exceptions import InvalidArgumentError, NumericFailureError
from apps.core.matrices import DataMatrix, FactorModel, MatrixLike, as_array, simplex_violation
from apps.core.rng import make_generator
from apps.core.simplex import project_simplex_columns
from apps.regularizers.volume import majorizer

from . import updates
from .config import MAX_ITER, REFRESH, TOLERANCE, SolverConfig, SolverState, SolveReport

logger = logging.getLogger(__name__)

RANDOM = 'random'
DATA_COLUMNS = 'data_columns'
PROVIDED = 'provided'
INIT_KINDS = (RANDOM, DATA_COLUMNS, PROVIDED)

PROVIDED_REPAIR_TOL = 1e-12


def init_strategy(X: MatrixLike, K: int, kind: str = DATA_COLUMNS, rng_seed: int = 0,
                  provided: Optional[FactorModel] = None) -> FactorModel:
    """
    Build a starting factor model.

    Args:
        X: M x L data
        K: number of basis columns
        kind: 'random' (B uniform on [0, 1)), 'data_columns' (B = K distinct
            randomly chosen columns of X) or 'provided'
        rng_seed: seed for the random choices
        provided: starting model for kind='provided'

    Returns:
        FactorModel: C is uniform (1/K) for the random kinds; a provided C is
        repaired onto the simplex when needed
    """
    X = as_array(X)
    M, L = X.shape
    if kind not in INIT_KINDS:
        raise InvalidArgumentError(f"Unknown init strategy {kind!r}; expected one of {INIT_KINDS}")
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")

    if kind == PROVIDED:
        if provided is None:
            raise InvalidArgumentError("init strategy 'provided' needs a starting model")
        model = provided.copy()
        if model.basis.shape != (M, K) or model.coeffs.shape != (K, L):
            raise InvalidArgumentError(
                f"Provided model has shapes {model.basis.shape}, {model.coeffs.shape}; "
                f"expected {(M, K)}, {(K, L)}"
            )
        if not np.all(np.isfinite(model.coeffs)):
            raise InvalidArgumentError("Provided coefficients contain non-finite entries.")
        if simplex_violation(model.coeffs) > PROVIDED_REPAIR_TOL:
            logger.warning("[SOLVER] provided coefficients were off the simplex; projecting them back")
            model.coeffs = project_simplex_columns(model.coeffs)
        return model

    generator = make_generator(rng_seed)
    if kind == RANDOM:
        basis = generator.uniform(0.0, 1.0, size=(M, K))
    else:
        if K > L:
            raise InvalidArgumentError(f"Cannot pick K={K} distinct columns from L={L} samples")
        columns = generator.choice(L, size=K, replace=False)
        basis = X[:, columns].copy()
    return FactorModel(basis, np.full((K, L), 1.0 / K))


class RVolMinService:
    """
    Service running one robust volume-minimization solve.

    Implements:
    - state initialization for both weight schedules
    - the outer loop with tolerance / max_iter termination
    - optional momentum restarts
    """

    def __init__(self, config: SolverConfig, callback: Optional[Callable[[SolverState], None]] = None):
        self.config = config
        self.callback = callback

    def initial_state(self, X: np.ndarray, model: FactorModel) -> SolverState:
        config = self.config
        if config.weight_schedule == REFRESH:
            weights = updates.update_weights(X, model.basis, model.coeffs, config.p, config.epsilon)
        else:
            weights = np.ones(model.n_samples)
        state = SolverState(
            model=model,
            weights=weights,
            F=updates.initial_majorizer(model.basis, config),
        )
        state.objective_history.append(self._objective(X, state.model))
        return state

    def _objective(self, X: np.ndarray, model: FactorModel) -> float:
        value = updates.objective(X, model.basis, model.coeffs, self.config)
        if not math.isfinite(value):
            raise NumericFailureError(
                f"Objective became non-finite ({value}); basis norm {np.linalg.norm(model.basis):.3e}"
            )
        return value

    def step(self, X: np.ndarray, state: SolverState) -> float:
        """One outer iteration; returns the new objective."""
        config = self.config
        kind = config.regularizer_kind

        C_old = state.model.coeffs
        C_new = updates.update_C(X, state, config)
        if config.extrapolate:
            state.C_prev = C_old
            state.q = updates.next_q(state.q)
        state.model.coeffs = C_new

        if config.weight_schedule == REFRESH:
            state.weights = updates.update_weights(X, state.model.basis, C_new, config.p, config.epsilon)
        state.model.basis = updates.update_B(X, state, config)

        state.weights = updates.update_weights(X, state.model.basis, C_new, config.p, config.epsilon)
        state.F = majorizer(state.model.basis, kind)
        state.iteration += 1

        value = self._objective(X, state.model)
        if (config.extrapolate and config.restart_extrapolation
                and value > state.objective_history[-1]):
            state.q = 1.0
            state.C_prev = C_new.copy()
        state.objective_history.append(value)
        return value

    def run(self, X: MatrixLike, model: FactorModel) -> SolveReport:
        X = as_array(X)
        config = self.config
        started = time.perf_counter()
        state = self.initial_state(X, model.copy())

        logger.info(
            f"[SOLVER] start: M={X.shape[0]} L={X.shape[1]} K={model.rank} p={config.p} "
            f"lambda={config.lambda_} regularizer={config.regularizer} "
            f"basis={config.basis_constraint} extrapolate={config.extrapolate}"
        )
        reason = MAX_ITER
        while state.iteration < config.max_iter:
            previous = state.objective_history[-1]
            value = self.step(X, state)
            if self.callback is not None:
                self.callback(state)
            if state.iteration % 100 == 0:
                logger.debug(f"[SOLVER] iteration {state.iteration}: objective {value:.10g}")
            if abs(previous - value) < config.tol:
                reason = TOLERANCE
                break

        wall_time = time.perf_counter() - started
        logger.info(
            f"[SOLVER] done: {state.iteration} iterations ({reason}), "
            f"objective {state.objective_history[-1]:.10g}, {wall_time:.3f}s"
        )
        return SolveReport(
            model=state.model,
            weights=state.weights,
            objective_history=state.objective_history,
            iterations_used=state.iteration,
            termination_reason=reason,
            wall_time=wall_time,
            config=config,
        )


def solve(X: MatrixLike, K: int, init: Union[FactorModel, str] = DATA_COLUMNS,
          config: Optional[SolverConfig] = None,
          callback: Optional[Callable[[SolverState], None]] = None) -> SolveReport:
    """
    Factor X ~ B C with simplex-constrained C, robust to outlying columns.

    Args:
        X: M x L data (DataMatrix or array)
        K: number of basis columns, K <= min(M, L)
        init: a FactorModel, or the name of an init strategy
        config: solver settings (defaults from settings.RVOLMIN)
        callback: called with the state after every outer iteration

    Returns:
        SolveReport
    """
    if not isinstance(X, DataMatrix):
        X = DataMatrix(np.asarray(X, dtype=float))
    config = config or SolverConfig.from_settings()
    M, L = X.rows, X.cols
    if not 1 <= K <= min(M, L):
        raise InvalidArgumentError(f"K={K} must satisfy 1 <= K <= min(M, L) = {min(M, L)}")

    if isinstance(init, FactorModel):
        model = init_strategy(X.values, K, PROVIDED, config.rng_seed, provided=init)
    else:
        model = init_strategy(X.values, K, init, config.rng_seed)
    return RVolMinService(config, callback).run(X.values, model)
