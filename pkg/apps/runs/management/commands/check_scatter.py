"""
Check Scatter Command

Certifies a coefficient matrix S (N x L CSV, columns on the unit simplex):
writes report.json with gamma, the threshold 1/sqrt(N-1), the
sufficiently-scattered verdict and the facet counts, plus manifest.json.

Columns off the simplex are projected back onto it with a warning. Facet
enumeration is limited to N <= 5.

Usage: python manage.py check_scatter S.csv
"""

import logging
from pathlib import Path

from apps.core.matrices import simplex_violation
from apps.core.simplex import project_simplex_columns
from apps.identifiability.geometry import DEFAULT_TOLERANCE, CoeffCloud, scattering_radius
from apps.identifiability.serializers import ScatterReportSerializer
from apps.runs.commands import RVolMinCommand
from apps.runs.io import read_matrix, write_json
from apps.runs.manifest import RunManifest

logger = logging.getLogger(__name__)


class Command(RVolMinCommand):
    help = 'Scattering radius and identifiability verdict for a coefficient matrix'

    def add_arguments(self, parser):
        parser.add_argument('input', help='Coefficient matrix CSV (N rows, L columns, no header)')
        parser.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE,
                            help='Extremeness / feasibility tolerance')
        self.add_output_argument(parser, 'scatter_out')

    def run(self, options) -> RunManifest:
        S = read_matrix(options['input'])
        violation = simplex_violation(S)
        if violation > options['tolerance']:
            logger.warning(
                f"[RUNS] coefficient columns are off the unit simplex (violation {violation:.3e}); projecting them back"
            )
            S = project_simplex_columns(S)

        report = scattering_radius(CoeffCloud(S, tolerance=options['tolerance']))
        data = ScatterReportSerializer(report).data

        out = self.output_dir(options)
        write_json(out / 'report.json', data)

        verdict = 'sufficiently scattered' if report.sufficiently_scattered else 'NOT sufficiently scattered'
        self.stdout.write(f"gamma = {data['gamma']}, threshold = {report.threshold:.6g}: {verdict}")
        return RunManifest(
            command='check_scatter',
            config={'tolerance': options['tolerance']},
            output_dir=str(out),
            inputs={'S': str(Path(options['input']))},
            outputs=['report.json'],
        )
