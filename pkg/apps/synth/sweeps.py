"""
Monte-Carlo Sweep Service

Runs one-axis experiments: for every axis value and trial, draw an instance
with a derived seed, solve it, and score the estimated basis against A_true
with the permutation-matched MSE.

SEEDING:
trial seed = derive_seed(base_spec.rng_seed, axis_index, trial_index); the
same seed drives the instance draw and the solver's initialization. Records
are sorted by (axis_index, trial_index) before aggregation, so results do not
depend on how joblib schedules the trials.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from apps.core.exceptions import ParameterError, RVolMinError
from apps.core.metrics import permutation_matched_mse
from apps.core.rng import derive_seed
from apps.solver.config import BASIS_CONSTRAINTS, SolverConfig
from apps.solver.services import DATA_COLUMNS, init_strategy, solve
from apps.regularizers.volume import KINDS

from .generators import ILL_CONDITIONED, SynthSpec, gen_instance

logger = logging.getLogger(__name__)

SNR = 'snr'
SOR = 'sor'
RANK = 'k'
OUTLIERS = 'n_outliers'
LAMBDA = 'lambda'
P = 'p'
REGULARIZER = 'regularizer'
BASIS_CONSTRAINT = 'basis_constraint'

SPEC_AXES = {SNR: 'snr_db', SOR: 'sor_db', RANK: 'K', OUTLIERS: 'n_outliers'}
CONFIG_AXES = {LAMBDA: 'lambda_', P: 'p', REGULARIZER: 'regularizer', BASIS_CONSTRAINT: 'basis_constraint'}
AXES = tuple(SPEC_AXES) + tuple(CONFIG_AXES)

CONVERGENCE_TARGET = 0.01


@dataclass(frozen=True)
class SweepPreset:
    axis: str
    values: Tuple[Any, ...]
    spec: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    description: str = ''


_BASE = {'M': 50, 'K': 5, 'L': 1000, 'n_outliers': 20}

PRESETS = {
    'fig5': SweepPreset(
        SNR, (15.0, 20.0, 25.0, 30.0, 35.0), {**_BASE, 'sor_db': -5.0}, {'lambda_': 0.5},
        'MSE vs SNR, SOR -5 dB',
    ),
    'fig6': SweepPreset(
        LAMBDA, (0.1, 0.25, 0.5, 1.0, 2.0, 5.0), {**_BASE, 'sor_db': -5.0, 'snr_db': 25.0}, {},
        'MSE vs lambda, SOR -5 dB',
    ),
    'fig_k': SweepPreset(
        RANK, (3, 5, 7, 9, 11, 13, 15), {**_BASE, 'sor_db': -5.0, 'snr_db': 20.0}, {},
        'MSE vs K, SNR 20 dB, SOR -5 dB',
    ),
    'fig_sor': SweepPreset(
        SOR, (-15.0, -10.0, -5.0, 0.0, 5.0, 10.0), {**_BASE, 'snr_db': 20.0}, {},
        'MSE vs SOR, SNR 20 dB',
    ),
    'fig7': SweepPreset(
        OUTLIERS, (10, 20, 30, 40, 50, 60), {**_BASE, 'sor_db': -5.0, 'snr_db': 20.0}, {},
        'MSE vs number of outliers, SNR 20 dB, SOR -5 dB',
    ),
    'fig8': SweepPreset(
        P, (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0), {**_BASE, 'sor_db': -10.0, 'snr_db': 20.0}, {},
        'MSE vs p, SNR 20 dB (SOR -10 dB; override with --sor)',
    ),
    'table1': SweepPreset(
        SNR, (25.0, 35.0), {**_BASE, 'sor_db': -5.0, 'basis_kind': ILL_CONDITIONED}, {'lambda_': 0.5},
        'ill-conditioned basis (condition number 1000) vs SNR, SOR -5 dB',
    ),
    'table2': SweepPreset(
        REGULARIZER, KINDS, {**_BASE, 'sor_db': -5.0, 'snr_db': 20.0}, {},
        'volume regularizers at SNR 20 dB, SOR -5 dB',
    ),
    'table3': SweepPreset(
        BASIS_CONSTRAINT, BASIS_CONSTRAINTS, {**_BASE, 'sor_db': 5.0, 'snr_db': 18.0}, {},
        'unconstrained vs nonnegative basis, SOR 5 dB (vary --snr over 10, 14, 18, 22)',
    ),
}

# Fixed-seed instance for the extrapolation comparison.
CONVERGENCE_SPEC = {**_BASE, 'snr_db': 18.0, 'sor_db': -5.0}


@dataclass
class TrialRecord:
    axis_index: int
    axis_value: Any
    trial_index: int
    seed: int
    mse_linear: float = math.nan
    mse_db: float = math.nan
    iterations: int = 0
    termination_reason: str = ''
    wall_time: float = 0.0
    failed: bool = False
    error: str = ''


@dataclass
class SweepPoint:
    axis_value: Any
    mean_mse_db: float
    median_mse_db: float
    trials: int
    failures: int


@dataclass
class SweepResult:
    axis: str
    values: List[Any]
    trials: int
    records: List[TrialRecord]
    base_spec: Optional[SynthSpec] = None
    solver_config: Optional[SolverConfig] = None

    def points(self) -> List[SweepPoint]:
        """Per-axis-value aggregates over the trials that did not fail."""
        points = []
        for index, value in enumerate(self.values):
            rows = [r for r in self.records if r.axis_index == index]
            good = np.array([r.mse_db for r in rows if not r.failed])
            points.append(SweepPoint(
                axis_value=value,
                mean_mse_db=float(good.mean()) if good.size else math.nan,
                median_mse_db=float(np.median(good)) if good.size else math.nan,
                trials=len(rows),
                failures=len(rows) - int(good.size),
            ))
        return points

    @property
    def failures(self) -> int:
        return sum(1 for record in self.records if record.failed)


def parse_axis_value(axis: str, raw) -> Any:
    """Coerce one axis value (possibly a CLI string) to its typed form."""
    if axis not in AXES:
        raise ParameterError(f"Unknown sweep axis {axis!r}; expected one of {AXES}")
    if axis == REGULARIZER:
        if raw not in KINDS:
            raise ParameterError(f"regularizer must be one of {KINDS}, got {raw!r}")
        return raw
    if axis == BASIS_CONSTRAINT:
        if raw not in BASIS_CONSTRAINTS:
            raise ParameterError(f"basis_constraint must be one of {BASIS_CONSTRAINTS}, got {raw!r}")
        return raw
    try:
        if axis in (RANK, OUTLIERS):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise ParameterError(f"Bad value {raw!r} for sweep axis {axis!r}")


def apply_axis(base_spec: SynthSpec, config: SolverConfig, axis: str, value) -> Tuple[SynthSpec, SolverConfig]:
    """Instance spec and solver config for one point of the axis."""
    if axis in SPEC_AXES:
        changes = {SPEC_AXES[axis]: value}
        if axis == RANK and base_spec.basis_kind == ILL_CONDITIONED:
            changes['singular_values'] = None
        return replace(base_spec, **changes), config
    return base_spec, replace(config, **{CONFIG_AXES[axis]: value})


def _run_trial(spec: SynthSpec, config: SolverConfig, init: str,
               axis_index: int, axis_value, trial_index: int) -> TrialRecord:
    seed = derive_seed(spec.rng_seed, axis_index, trial_index)
    record = TrialRecord(axis_index=axis_index, axis_value=axis_value, trial_index=trial_index, seed=seed)
    started = time.perf_counter()
    try:
        instance = gen_instance(spec.with_seed(seed))
        report = solve(instance.X, spec.K, init=init, config=replace(config, rng_seed=seed))
        record.mse_linear, record.mse_db = permutation_matched_mse(instance.A_true, report.model.basis)
        record.iterations = report.iterations_used
        record.termination_reason = report.termination_reason
    except RVolMinError as e:
        record.failed = True
        record.error = f"{type(e).__name__}: {e}"
        logger.warning(f"[SWEEP] trial ({axis_index}, {trial_index}) at {axis_value!r} failed: {record.error}")
    record.wall_time = time.perf_counter() - started
    return record


def run_sweep(base_spec: SynthSpec, axis: str, values: Sequence, trials: int,
              solver_config: Optional[SolverConfig] = None, init: str = DATA_COLUMNS,
              jobs: int = 1) -> SweepResult:
    """
    Run trials x len(values) solves along one axis.

    Args:
        base_spec: instance parameters; rng_seed is the base seed
        axis: one of AXES
        values: axis values
        trials: trials per value (>= 1)
        solver_config: solver settings (defaults from settings.RVOLMIN)
        init: init strategy name
        jobs: joblib worker count

    Returns:
        SweepResult: failed trials are kept, flagged, and left out of aggregates
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if not values:
        raise ParameterError("A sweep needs at least one axis value.")
    config = solver_config or SolverConfig.from_settings()
    values = [parse_axis_value(axis, value) for value in values]

    tasks = []
    for axis_index, value in enumerate(values):
        spec, point_config = apply_axis(base_spec, config, axis, value)
        for trial_index in range(trials):
            tasks.append((spec, point_config, init, axis_index, value, trial_index))

    logger.info(
        f"[SWEEP] axis={axis} values={values} trials={trials} jobs={jobs} base_seed={base_spec.rng_seed}"
    )
    records = Parallel(n_jobs=jobs)(delayed(_run_trial)(*task) for task in tasks)
    records = sorted(records, key=lambda r: (r.axis_index, r.trial_index))

    result = SweepResult(
        axis=axis, values=values, trials=trials, records=records,
        base_spec=base_spec, solver_config=config,
    )
    for point in result.points():
        logger.info(
            f"[SWEEP] {axis}={point.axis_value!r}: mean {point.mean_mse_db:.4f} dB, "
            f"median {point.median_mse_db:.4f} dB, failures {point.failures}/{point.trials}"
        )
    return result


def iterations_to_target(history: Sequence[float], target: float) -> Optional[int]:
    """First iteration whose objective is at or below target (None if never)."""
    for iteration, value in enumerate(history):
        if value <= target:
            return iteration
    return None


@dataclass
class ConvergenceTrace:
    seed: int
    extrapolated: List[float]
    plain: List[float]
    target: float
    extrapolated_iterations: Optional[int]
    plain_iterations: Optional[int]

    def to_dict(self) -> dict:
        return asdict(self)


def convergence_traces(spec: SynthSpec, config: Optional[SolverConfig] = None,
                       trials: int = 1, init: str = DATA_COLUMNS) -> List[ConvergenceTrace]:
    """
    Objective traces with and without extrapolation from identical starts.

    The target is the extrapolated run's final objective plus 1% of its
    magnitude; the trace records when each run first reaches it.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    config = config or SolverConfig.from_settings()
    traces = []
    for trial_index in range(trials):
        seed = derive_seed(spec.rng_seed, 0, trial_index)
        instance = gen_instance(spec.with_seed(seed))
        start = init_strategy(instance.X.values, spec.K, init, seed)
        fast = solve(instance.X, spec.K, init=start, config=replace(config, extrapolate=True, rng_seed=seed))
        slow = solve(instance.X, spec.K, init=start, config=replace(config, extrapolate=False, rng_seed=seed))
        final = fast.final_objective
        target = final + CONVERGENCE_TARGET * abs(final)
        trace = ConvergenceTrace(
            seed=seed,
            extrapolated=list(fast.objective_history),
            plain=list(slow.objective_history),
            target=target,
            extrapolated_iterations=iterations_to_target(fast.objective_history, target),
            plain_iterations=iterations_to_target(slow.objective_history, target),
        )
        logger.info(
            f"[SWEEP] convergence trial {trial_index}: target {target:.6g} reached at "
            f"{trace.extrapolated_iterations} (extrapolated) vs {trace.plain_iterations} (plain)"
        )
        traces.append(trace)
    return traces


def average_trace(histories: Sequence[Sequence[float]], length: Optional[int] = None) -> np.ndarray:
    """Mean over runs, each history held at its final value past its end."""
    length = max([len(history) for history in histories] + [length or 0])
    padded = np.array([list(h) + [h[-1]] * (length - len(h)) for h in histories], dtype=float)
    return padded.mean(axis=0)
