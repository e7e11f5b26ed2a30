"""
Factorize Command

Factors a data matrix X (M x L CSV) as B C with simplex-constrained C and
writes into --out:
- B.csv, C.csv: the factors
- weights.csv: final per-column weights w
- scores.csv: outlier scores 1/w normalized to [0, 1]
- objective.csv: objective value per iteration (initial value first)
- report.json: termination reason, iterations, objective trace, resolved config
- manifest.json

Usage: python manage.py factorize X.csv --K 3 [--p 0.5 --lambda 1 ...]
"""

from pathlib import Path

from apps.core.exceptions import InvalidArgumentError
from apps.core.matrices import DataMatrix
from apps.runs.commands import RVolMinCommand
from apps.runs.io import read_matrix, write_json, write_matrix, write_vector
from apps.runs.manifest import RunManifest
from apps.solver.serializers import SolveReportSerializer
from apps.solver.services import solve
from apps.solver.updates import outlier_scores


class Command(RVolMinCommand):
    help = 'Robust volume-minimization factorization of a CSV data matrix'

    def add_arguments(self, parser):
        parser.add_argument('input', help='Data matrix CSV (M rows, L columns, no header)')
        parser.add_argument('--K', type=int, required=True, help='Number of basis columns')
        self.add_solver_arguments(parser)
        self.add_seed_argument(parser)
        self.add_output_argument(parser, 'factorize_out')

    def run(self, options) -> RunManifest:
        X = DataMatrix(read_matrix(options['input']))
        K = options['K']
        if not 1 <= K < min(X.rows, X.cols):
            raise InvalidArgumentError(
                f"--K must satisfy 1 <= K < min(M, L) = {min(X.rows, X.cols)}, got {K}"
            )
        config = self.solver_config_from_options(options, rng_seed=options['seed'])
        self.stdout.write(f"Factorizing {X.rows} x {X.cols} data with K={K}...")

        report = solve(X, K, init=options['init'], config=config)

        out = self.output_dir(options)
        model = report.model
        write_matrix(out / 'B.csv', model.basis)
        write_matrix(out / 'C.csv', model.coeffs)
        write_vector(out / 'weights.csv', report.weights)
        write_vector(out / 'scores.csv', outlier_scores(report.weights))
        write_vector(out / 'objective.csv', report.objective_history)
        write_json(out / 'report.json', SolveReportSerializer(report).data)

        self.stdout.write(
            f"  {report.termination_reason} after {report.iterations_used} iterations, "
            f"objective {report.final_objective:.10g}"
        )
        return RunManifest(
            command='factorize',
            config={**config.to_dict(), 'K': K, 'init': options['init']},
            output_dir=str(out),
            inputs={'X': str(Path(options['input']))},
            outputs=['B.csv', 'C.csv', 'weights.csv', 'scores.csv', 'objective.csv', 'report.json'],
            seed=options['seed'],
        )
