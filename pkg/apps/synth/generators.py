"""
Synthetic Mixture Generator

Builds X = A S + noise with a fraction of columns replaced by outliers:
- A: M x K, entries uniform on [0, 1) (optionally re-spectra'd to a fixed
  list of singular values for ill-conditioned experiments)
- S: K x L, columns uniform on the unit simplex, rejected while their largest
  entry exceeds purity_level (no pure pixels when purity_level < 1)
- noise: white Gaussian, scaled so the empirical SNR is exactly snr_db
- outliers: N_o columns, chosen without replacement, replaced by uniform
  vectors scaled so the empirical SOR is exactly sor_db

Draw order from the seeded stream is fixed: A, S, noise, outlier indices,
outlier values.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from apps.core.exceptions import ParameterError
from apps.core.matrices import DataMatrix
from apps.core.metrics import mean_column_power, snr_db, sor_db
from apps.core.rng import make_generator

logger = logging.getLogger(__name__)

UNIFORM = 'uniform'
ILL_CONDITIONED = 'ill_conditioned'
BASIS_KINDS = (UNIFORM, ILL_CONDITIONED)

ILL_CONDITIONED_SPECTRUM = (1.0, 0.1, 0.01, 0.005, 0.001)
MAX_DRAWS_PER_COLUMN = 10 ** 6
_SIMPLEX_BATCH = 4096


@dataclass(frozen=True)
class SynthSpec:
    """
    Parameters of one synthetic instance.

    Attributes:
        M, K, L: features, endmembers, samples
        snr_db: signal-to-noise ratio in dB (inf for noiseless)
        sor_db: signal-to-outlier ratio in dB (inf only when n_outliers = 0)
        n_outliers: number of outlier columns N_o
        purity_level: cap on the largest entry of every coefficient column
        basis_kind: 'uniform' or 'ill_conditioned'
        singular_values: spectrum imposed on A for 'ill_conditioned'
        rng_seed: seed of the Philox stream
    """
    M: int = 50
    K: int = 5
    L: int = 1000
    snr_db: float = math.inf
    sor_db: float = math.inf
    n_outliers: int = 0
    purity_level: float = 0.85
    basis_kind: str = UNIFORM
    singular_values: Optional[Tuple[float, ...]] = None
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.M, self.K, self.L) < 1:
            raise ParameterError(f"M, K, L must be positive, got {(self.M, self.K, self.L)}")
        if not 0 <= self.n_outliers <= self.L:
            raise ParameterError(f"n_outliers must lie in [0, L={self.L}], got {self.n_outliers}")
        if not 1.0 / self.K < self.purity_level <= 1.0:
            raise ParameterError(
                f"purity_level must lie in (1/K, 1] = ({1.0 / self.K:.4g}, 1], got {self.purity_level}"
            )
        if math.isnan(self.snr_db) or math.isnan(self.sor_db):
            raise ParameterError("snr_db and sor_db must be numbers (inf allowed).")
        if self.snr_db == -math.inf or self.sor_db == -math.inf:
            raise ParameterError("snr_db and sor_db cannot be -inf.")
        if self.n_outliers and math.isinf(self.sor_db):
            raise ParameterError("Outliers need a finite sor_db.")
        if self.basis_kind not in BASIS_KINDS:
            raise ParameterError(f"basis_kind must be one of {BASIS_KINDS}, got {self.basis_kind!r}")
        if self.basis_kind == ILL_CONDITIONED:
            values = tuple(self.singular_values or ILL_CONDITIONED_SPECTRUM)
            if len(values) != self.K or self.K > self.M:
                raise ParameterError(
                    f"ill_conditioned basis needs K={self.K} singular values and K <= M, got {len(values)}"
                )
            if min(values) <= 0:
                raise ParameterError("Singular values must be positive.")
            object.__setattr__(self, 'singular_values', values)

    def with_seed(self, seed: int) -> 'SynthSpec':
        return replace(self, rng_seed=int(seed))


@dataclass
class SynthInstance:
    X: DataMatrix
    A_true: np.ndarray
    S_true: np.ndarray
    outlier_indices: Tuple[int, ...]
    noise: np.ndarray
    realized_snr_db: float
    realized_sor_db: float
    spec: Optional[SynthSpec] = field(default=None, repr=False)

    @property
    def clean(self) -> np.ndarray:
        return self.A_true @ self.S_true


def _draw_basis(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    A = rng.uniform(0.0, 1.0, size=(spec.M, spec.K))
    if spec.basis_kind == ILL_CONDITIONED:
        U, _, Vt = np.linalg.svd(A, full_matrices=False)
        A = (U * np.asarray(spec.singular_values)) @ Vt
    return A


def _draw_coefficients(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform simplex columns (normalized exponentials) with purity rejection."""
    accepted, count, draws = [], 0, 0
    limit = MAX_DRAWS_PER_COLUMN * spec.L
    while count < spec.L:
        if draws >= limit:
            raise ParameterError(
                f"Purity rejection sampling exceeded {limit} draws (purity_level={spec.purity_level})"
            )
        batch = rng.standard_exponential(size=(spec.K, _SIMPLEX_BATCH))
        batch /= batch.sum(axis=0)
        draws += _SIMPLEX_BATCH
        keep = batch[:, batch.max(axis=0) <= spec.purity_level]
        accepted.append(keep)
        count += keep.shape[1]
    return np.hstack(accepted)[:, :spec.L]


def _scale_to_ratio(signal_power: float, other: np.ndarray, ratio_db: float) -> np.ndarray:
    power = mean_column_power(other)
    if power == 0:
        return other
    return other * math.sqrt(signal_power / (10.0 ** (ratio_db / 10.0)) / power)


def gen_instance(spec: SynthSpec) -> SynthInstance:
    """
    Draw one instance.

    Raises:
        ParameterError: purity rejection sampling did not finish
    """
    rng = make_generator(spec.rng_seed)
    A = _draw_basis(spec, rng)
    S = _draw_coefficients(spec, rng)
    clean = A @ S
    signal_power = mean_column_power(clean)

    noise = np.zeros_like(clean)
    if math.isfinite(spec.snr_db):
        noise = _scale_to_ratio(signal_power, rng.standard_normal(size=clean.shape), spec.snr_db)
    X = clean + noise

    outliers: Tuple[int, ...] = ()
    realized_sor = math.inf
    if spec.n_outliers:
        outliers = tuple(int(i) for i in np.sort(rng.choice(spec.L, size=spec.n_outliers, replace=False)))
        values = _scale_to_ratio(signal_power, rng.uniform(0.0, 1.0, size=(spec.M, spec.n_outliers)),
                                 spec.sor_db)
        X[:, list(outliers)] = values
        realized_sor = sor_db(clean, X, outliers)

    instance = SynthInstance(
        X=DataMatrix(X),
        A_true=A,
        S_true=S,
        outlier_indices=outliers,
        noise=noise,
        realized_snr_db=snr_db(clean, noise),
        realized_sor_db=realized_sor,
        spec=spec,
    )
    logger.debug(
        f"[SYNTH] seed={spec.rng_seed} M={spec.M} K={spec.K} L={spec.L} "
        f"snr={instance.realized_snr_db:.4g}dB sor={instance.realized_sor_db:.4g}dB N_o={spec.n_outliers}"
    )
    return instance
