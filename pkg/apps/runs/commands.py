"""
Shared plumbing of the management commands.

- solver flags (--p, --lambda, ...) and their validation through
  SolverConfigSerializer
- synthetic-instance flags (--M, --snr, --outliers, ...) through
  SynthSpecSerializer
- error translation to exit codes: 2 usage, 3 parse, 4 numeric failure
- manifest.json + RunRecord for every invocation
"""

import logging
import time
from pathlib import Path
from typing import Optional

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from apps.core.conf import rvolmin_setting
from apps.core.exceptions import (
    DegenerateInputError, InvalidArgumentError, NumericFailureError, ParameterError, ParseError,
    SingularMatrixError, UnsupportedDimensionError,
)
from apps.core.fields import parse_float_flag, parse_float_list
from apps.regularizers.volume import KINDS
from apps.solver.config import NONNEGATIVE, WEIGHT_SCHEDULES, SolverConfig
from apps.solver.serializers import SolverConfigSerializer
from apps.solver.services import DATA_COLUMNS, RANDOM
from apps.synth.generators import BASIS_KINDS, SynthSpec
from apps.synth.serializers import SynthSpecSerializer

from .manifest import RunManifest, record_run
from .models import RunRecord

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4

USAGE_ERRORS = (InvalidArgumentError, ParameterError, UnsupportedDimensionError)
NUMERIC_ERRORS = (NumericFailureError, SingularMatrixError, DegenerateInputError)

MAX_SEED = 2 ** 63 - 1

SOLVER_FLAGS = {
    'p': 'p', 'lambda_': 'lambda_', 'epsilon': 'epsilon', 'tau': 'tau', 'regularizer': 'regularizer',
    'max_iter': 'max_iter', 'tol': 'tol', 'weight_schedule': 'weight_schedule',
}
SPEC_FLAGS = {
    'M': 'M', 'K': 'K', 'L': 'L', 'snr': 'snr_db', 'sor': 'sor_db', 'outliers': 'n_outliers',
    'purity': 'purity_level', 'basis': 'basis_kind', 'singular_values': 'singular_values',
}


def seed_flag(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise ValueError(text)
    return value


def format_errors(error: ValidationError) -> str:
    detail = error.detail
    if isinstance(detail, dict):
        return '; '.join(f"{key}: {' '.join(str(m) for m in messages)}" for key, messages in detail.items())
    if isinstance(detail, list):
        return ' '.join(str(m) for m in detail)
    return str(detail)


class RVolMinCommand(BaseCommand):
    """
    Base class of the CLI commands.

    Subclasses implement run(options) and return the RunManifest of what they
    wrote; the base class times the run, writes manifest.json, records the run
    and turns toolkit errors into CommandError with the matching exit code.
    """

    def add_output_argument(self, parser, default: str):
        parser.add_argument('--out', default=default, help=f'Output directory (default: {default})')

    def add_seed_argument(self, parser, default: Optional[int] = 0):
        parser.add_argument('--seed', type=seed_flag, default=default, help='Base random seed')

    def add_solver_arguments(self, parser):
        group = parser.add_argument_group('solver')
        group.add_argument('--p', type=float, help='Robustness exponent p in (0, 2]')
        group.add_argument('--lambda', dest='lambda_', type=float, help='Volume regularization weight')
        group.add_argument('--epsilon', type=float, help='Fitting-term smoothing constant')
        group.add_argument('--tau', type=float, help='Log-det offset')
        group.add_argument('--regularizer', choices=KINDS, help='Volume regularizer')
        group.add_argument('--nonneg', action='store_true', help='Constrain the basis to be nonnegative')
        group.add_argument('--no-extrapolate', action='store_true', help='Plain (non-momentum) C-updates')
        group.add_argument('--restart', action='store_true', help='Reset momentum when the objective rises')
        group.add_argument('--weight-schedule', choices=WEIGHT_SCHEDULES, help='Weight refresh placement')
        group.add_argument('--max-iter', type=int, help='Outer iteration cap')
        group.add_argument('--tol', type=float, help='Absolute objective-change tolerance')
        group.add_argument('--init', choices=(DATA_COLUMNS, RANDOM), default=DATA_COLUMNS,
                           help='Initialization strategy')

    def add_spec_arguments(self, parser):
        group = parser.add_argument_group('synthetic instance')
        group.add_argument('--M', type=int, help='Number of features (rows)')
        group.add_argument('--K', type=int, help='Number of basis columns')
        group.add_argument('--L', type=int, help='Number of samples (columns)')
        group.add_argument('--snr', type=parse_float_flag, help='SNR in dB (inf for noiseless)')
        group.add_argument('--sor', type=parse_float_flag, help='SOR in dB')
        group.add_argument('--outliers', type=int, help='Number of outlier columns')
        group.add_argument('--purity', type=float, help='Purity level (largest coefficient)')
        group.add_argument('--basis', choices=BASIS_KINDS, help='Basis distribution')
        group.add_argument('--singular-values', type=parse_float_list,
                           help='Comma-separated spectrum for --basis ill_conditioned')

    def jobs_from_options(self, options) -> int:
        jobs = options.get('jobs')
        if jobs is None:
            jobs = rvolmin_setting('JOBS')
        if jobs == 0:
            raise InvalidArgumentError("--jobs must be non-zero")
        return int(jobs)

    def solver_config_from_options(self, options, preset: Optional[dict] = None,
                                   rng_seed: Optional[int] = None) -> SolverConfig:
        data = dict(preset or {})
        data.update({field: options[flag] for flag, field in SOLVER_FLAGS.items()
                     if options.get(flag) is not None})
        if options.get('nonneg'):
            data['basis_constraint'] = NONNEGATIVE
        if options.get('no_extrapolate'):
            data['extrapolate'] = False
        if options.get('restart'):
            data['restart_extrapolation'] = True
        if rng_seed is not None:
            data['rng_seed'] = rng_seed
        serializer = SolverConfigSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.save()

    def spec_from_options(self, options, defaults: dict) -> SynthSpec:
        data = dict(defaults)
        data.update({field: options[flag] for flag, field in SPEC_FLAGS.items()
                     if options.get(flag) is not None})
        if options.get('seed') is not None:
            data['rng_seed'] = options['seed']
        serializer = SynthSpecSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.save()

    def run(self, options) -> RunManifest:
        raise NotImplementedError

    def handle(self, *args, **options):
        command = self.__module__.rsplit('.', 1)[-1]
        started = time.perf_counter()
        try:
            manifest = self.run(options)
        except CommandError as e:
            record_run(command, status=RunRecord.Status.FAILED, error=str(e))
            raise
        except ValidationError as e:
            self._fail(command, EXIT_USAGE, f"invalid arguments: {format_errors(e)}")
        except USAGE_ERRORS as e:
            self._fail(command, EXIT_USAGE, str(e))
        except ParseError as e:
            self._fail(command, EXIT_PARSE, f"parse error: {e}")
        except NUMERIC_ERRORS as e:
            self._fail(command, EXIT_NUMERIC, f"numeric failure: {e}")

        manifest.wall_time = time.perf_counter() - started
        manifest.outputs.append('manifest.json')
        manifest.write()
        record_run(command, manifest)
        logger.info(f"[RUNS] {command} finished in {manifest.wall_time:.3f}s -> {manifest.output_dir}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {', '.join(manifest.outputs)} to {manifest.output_dir}"))

    def _fail(self, command: str, returncode: int, message: str):
        record_run(command, status=RunRecord.Status.FAILED, error=message)
        logger.error(f"[RUNS] {command} failed: {message}")
        raise CommandError(message, returncode=returncode)

    @staticmethod
    def output_dir(options) -> Path:
        path = Path(options['out'])
        path.mkdir(parents=True, exist_ok=True)
        return path
