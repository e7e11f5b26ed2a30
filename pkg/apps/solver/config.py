"""
Solver configuration and state containers.

- SolverConfig: hyper-parameters of the robust volume-minimization solve
- SolverState: everything one outer iteration reads and writes
- SolveReport: the outcome handed back to callers and the CLI
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Set

import numpy as np

from apps.core.conf import rvolmin_setting
from apps.core.exceptions import InvalidArgumentError
from apps.core.matrices import FactorModel
from apps.regularizers.volume import KINDS, MajorizerMatrix, RegularizerKind

UNCONSTRAINED = 'unconstrained'
NONNEGATIVE = 'nonnegative'
BASIS_CONSTRAINTS = (UNCONSTRAINED, NONNEGATIVE)

REFRESH = 'refresh'
LAGGED = 'lagged'
WEIGHT_SCHEDULES = (REFRESH, LAGGED)

TOLERANCE = 'tolerance'
MAX_ITER = 'max_iter'


@dataclass
class SolverConfig:
    """
    Solver hyper-parameters.

    Attributes:
        p: robustness exponent in (0, 2]; smaller is more outlier-resistant
        lambda_: weight of the volume term (>= 0)
        epsilon: smoothing constant of the fitting term
        tau: log-det offset
        regularizer: 'logdet', 'det' or 'trace'
        basis_constraint: 'unconstrained' or 'nonnegative'
        extrapolate: use the momentum point for the C-update
        max_iter: outer iteration cap
        tol: stop when the absolute objective change falls below this
        safety_delta: inflation of power-iteration step-size estimates
        rng_seed: seed for random initialization
        weight_schedule: 'refresh' re-evaluates weights right before the
            B-update; 'lagged' uses the weights from the previous iteration
        restart_extrapolation: reset momentum whenever the objective rises
    """
    p: float = 0.5
    lambda_: float = 1.0
    epsilon: float = 1e-12
    tau: float = 1e-8
    regularizer: str = 'logdet'
    basis_constraint: str = UNCONSTRAINED
    extrapolate: bool = True
    max_iter: int = 1000
    tol: float = 1e-5
    safety_delta: float = 0.05
    rng_seed: int = 0
    weight_schedule: str = REFRESH
    restart_extrapolation: bool = False

    def __post_init__(self):
        if not 0.0 < self.p <= 2.0:
            raise InvalidArgumentError(f"p must lie in (0, 2], got {self.p}")
        if self.lambda_ < 0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {self.lambda_}")
        if self.epsilon < 0:
            raise InvalidArgumentError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.p < 1.0 and self.epsilon <= 0:
            raise InvalidArgumentError(f"epsilon must be > 0 when p < 1 (p={self.p})")
        if not self.tau > 0:
            raise InvalidArgumentError(f"tau must be > 0, got {self.tau}")
        if self.regularizer not in KINDS:
            raise InvalidArgumentError(f"regularizer must be one of {KINDS}, got {self.regularizer!r}")
        if self.basis_constraint not in BASIS_CONSTRAINTS:
            raise InvalidArgumentError(
                f"basis_constraint must be one of {BASIS_CONSTRAINTS}, got {self.basis_constraint!r}"
            )
        if self.weight_schedule not in WEIGHT_SCHEDULES:
            raise InvalidArgumentError(
                f"weight_schedule must be one of {WEIGHT_SCHEDULES}, got {self.weight_schedule!r}"
            )
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol < 0:
            raise InvalidArgumentError(f"tol must be >= 0, got {self.tol}")
        if self.safety_delta < 0:
            raise InvalidArgumentError(f"safety_delta must be >= 0, got {self.safety_delta}")

    @classmethod
    def from_settings(cls, **overrides) -> 'SolverConfig':
        """Config with defaults taken from settings.RVOLMIN, then overrides."""
        values = {
            'p': rvolmin_setting('P'),
            'lambda_': rvolmin_setting('LAMBDA'),
            'epsilon': rvolmin_setting('EPSILON'),
            'tau': rvolmin_setting('TAU'),
            'max_iter': rvolmin_setting('MAX_ITER'),
            'tol': rvolmin_setting('TOL'),
            'safety_delta': rvolmin_setting('SAFETY_DELTA'),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def regularizer_kind(self) -> RegularizerKind:
        return RegularizerKind(self.regularizer, self.tau)

    @property
    def nonnegative(self) -> bool:
        return self.basis_constraint == NONNEGATIVE

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverState:
    """
    Mutable per-solve state.

    q is the momentum sequence (q = 1 at the start, increasing); C_prev is the
    previous coefficient iterate used to form the momentum point.
    """
    model: FactorModel
    weights: np.ndarray
    F: Optional[MajorizerMatrix]
    q: float = 1.0
    C_prev: Optional[np.ndarray] = None
    objective_history: List[float] = field(default_factory=list)
    iteration: int = 0
    step_L: float = 0.0
    step_mu: float = 0.0
    # warning keys already logged during this solve
    warned: Set[str] = field(default_factory=set)

    def __post_init__(self):
        if self.C_prev is None:
            self.C_prev = self.model.coeffs.copy()


@dataclass
class SolveReport:
    model: FactorModel
    weights: np.ndarray
    objective_history: List[float]
    iterations_used: int
    termination_reason: str
    wall_time: float
    config: Optional[SolverConfig] = None

    @property
    def final_objective(self) -> float:
        return self.objective_history[-1]
