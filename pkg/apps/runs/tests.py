import json
import math
import os
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from apps.core.conf import DEFAULTS
from apps.core.exceptions import ParseError

from .io import atomic_write, jsonable, read_matrix, write_matrix
from .manifest import RunManifest, record_run
from .models import RunRecord

MEDIAL = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])


class MatrixFileTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        return path

    def test_full_precision_round_trip(self):
        values = np.array([[0.1, 1 / 3, -2.5e-300], [1e300, math.pi, 0.0]])
        path = write_matrix(self.dir / 'm.csv', values)
        np.testing.assert_array_equal(read_matrix(path), values)

    def test_ragged_row_reports_line(self):
        path = self.write('ragged.csv', '1,2,3\n4,5\n')
        with self.assertRaises(ParseError) as ctx:
            read_matrix(path)
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn(':2', str(ctx.exception))

    def test_bad_number_reports_line_and_column(self):
        path = self.write('bad.csv', '1,2,3\n4,5,x6\n')
        with self.assertRaises(ParseError) as ctx:
            read_matrix(path)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 3))

    def test_non_finite_field_reports_line_and_column(self):
        for token in ('nan', 'inf', '-Infinity'):
            path = self.write('nonfinite.csv', f'1,2\n3,4\n5,{token}\n')
            with self.assertRaises(ParseError) as ctx:
                read_matrix(path)
            self.assertEqual((ctx.exception.line, ctx.exception.column), (3, 2))

    def test_empty_and_missing_files(self):
        with self.assertRaises(ParseError):
            read_matrix(self.write('empty.csv', '\n\n'))
        with self.assertRaises(ParseError):
            read_matrix(self.dir / 'missing.csv')

    def test_atomic_write_leaves_no_temporaries(self):
        atomic_write(self.dir / 'out' / 'a.txt', 'first')
        atomic_write(self.dir / 'out' / 'a.txt', 'second')
        self.assertEqual(os.listdir(self.dir / 'out'), ['a.txt'])
        self.assertEqual((self.dir / 'out' / 'a.txt').read_text(), 'second')

    def test_jsonable(self):
        self.assertEqual(jsonable({'a': [math.inf, -math.inf, 1.5], 'b': Path('x')}),
                         {'a': ['inf', '-inf', 1.5], 'b': 'x'})


class CommandTestCase(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.call(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def read_json(self, *parts):
        return json.loads(self.dir.joinpath(*parts).read_text())


class FactorizeCommandTests(CommandTestCase):

    def setUp(self):
        super().setUp()
        rng = np.random.default_rng(0)
        A = rng.uniform(size=(3, 2))
        S = rng.dirichlet(np.ones(2), size=10).T
        S[:, :2] = np.eye(2)
        self.input = write_matrix(self.dir / 'X.csv', A @ S)

    def factorize(self, *flags):
        out = self.dir / 'out'
        self.call('factorize', str(self.input), '--K', '2', '--out', str(out), *flags)
        return out

    def test_defaults(self):
        out = self.factorize()
        C = read_matrix(out / 'C.csv')
        self.assertEqual(C.shape, (2, 10))
        np.testing.assert_allclose(C.sum(axis=0), 1.0, atol=1e-9)
        self.assertEqual(read_matrix(out / 'B.csv').shape, (3, 2))
        scores = read_matrix(out / 'scores.csv')
        self.assertTrue(np.all((scores >= 0) & (scores <= 1)))
        report = self.read_json('out', 'report.json')
        self.assertIn(report['termination_reason'], ('tolerance', 'max_iter'))
        self.assertEqual(len(report['objective_history']), report['iterations_used'] + 1)
        self.assertEqual(read_matrix(out / 'objective.csv').shape[0], report['iterations_used'] + 1)
        manifest = self.read_json('out', 'manifest.json')
        self.assertEqual(manifest['command'], 'factorize')
        self.assertEqual(manifest['config']['K'], 2)
        self.assertEqual(manifest['config']['p'], DEFAULTS['P'])
        self.assertIn('manifest.json', manifest['outputs'])
        record = RunRecord.objects.get()
        self.assertEqual(record.status, RunRecord.Status.SUCCESS)
        self.assertEqual(record.command, 'factorize')

    def test_quadratic_fit_gives_unit_weights(self):
        out = self.factorize('--p', '2', '--epsilon', '0')
        np.testing.assert_array_equal(read_matrix(out / 'weights.csv'), np.ones((10, 1)))

    def test_det_regularizer_trace_is_monotone(self):
        self.factorize('--regularizer', 'det', '--no-extrapolate', '--max-iter', '200')
        history = self.read_json('out', 'report.json')['objective_history']
        for before, after in zip(history, history[1:]):
            self.assertLessEqual(after, before + 1e-9 * abs(before))

    def test_rank_too_large_is_usage_error(self):
        self.assertExitCode(2, 'factorize', str(self.input), '--K', '3', '--out', str(self.dir / 'o'))

    def test_bad_flag_values_are_usage_errors(self):
        self.assertExitCode(2, 'factorize', str(self.input), '--K', '2', '--p', '0.5', '--epsilon', '0')
        self.assertEqual(RunRecord.objects.get().status, RunRecord.Status.FAILED)

    def test_parse_error_exit_code(self):
        bad = self.dir / 'bad.csv'
        bad.write_text('1,2,3\n4,oops,6\n')
        error = self.assertExitCode(3, 'factorize', str(bad), '--K', '1')
        self.assertIn(':2:2', str(error))

    def test_non_finite_input_is_a_parse_error(self):
        bad = self.dir / 'nan.csv'
        bad.write_text('1,2,3\n4,5,6\nnan,8,9\n')
        error = self.assertExitCode(3, 'factorize', str(bad), '--K', '1')
        self.assertIn(':3:1', str(error))


class SynthCommandTests(CommandTestCase):

    def test_clean_instance_matches_factors(self):
        self.call('synth', '--M', '6', '--K', '3', '--L', '40', '--snr', 'inf', '--outliers', '0',
                  '--out', str(self.dir / 's'))
        X = read_matrix(self.dir / 's' / 'X.csv')
        A = read_matrix(self.dir / 's' / 'A_true.csv')
        S = read_matrix(self.dir / 's' / 'S_true.csv')
        np.testing.assert_allclose(X, A @ S, rtol=0, atol=1e-12)
        self.assertEqual((self.dir / 's' / 'outliers.txt').read_text(), '')

    def test_same_seed_same_bytes(self):
        flags = ['--M', '8', '--K', '3', '--L', '60', '--snr', '20', '--sor', '-5', '--outliers', '5',
                 '--seed', '7']
        self.call('synth', *flags, '--out', str(self.dir / 'a'))
        self.call('synth', *flags, '--out', str(self.dir / 'b'))
        for name in ('X.csv', 'A_true.csv', 'S_true.csv', 'outliers.txt'):
            self.assertEqual((self.dir / 'a' / name).read_bytes(), (self.dir / 'b' / name).read_bytes())
        self.assertEqual(len((self.dir / 'a' / 'outliers.txt').read_text().split()), 5)
        manifest = self.read_json('a', 'manifest.json')
        self.assertEqual(manifest['seed'], 7)
        self.assertEqual(manifest['config']['sor_db'], -5.0)

    def test_invalid_spec_is_usage_error(self):
        self.assertExitCode(2, 'synth', '--K', '4', '--purity', '0.2', '--out', str(self.dir / 's'))
        self.assertExitCode(2, 'synth', '--outliers', '3', '--out', str(self.dir / 's'))


class BenchCommandTests(CommandTestCase):

    def test_preset_axis(self):
        self.call('bench', '--preset', 'fig5', '--M', '10', '--K', '3', '--L', '80', '--outliers', '4',
                  '--trials', '1', '--max-iter', '10', '--out', str(self.dir / 'b'))
        lines = (self.dir / 'b' / 'sweep.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'axis_value,mean_mse_db,median_mse_db,trials,failures')
        self.assertEqual([float(line.split(',')[0]) for line in lines[1:]], [15, 20, 25, 30, 35])
        report = self.read_json('b', 'report.json')
        self.assertEqual(report['axis'], 'snr')
        self.assertEqual(len(report['records']), 5)
        self.assertEqual(report['solver_config']['lambda_'], 0.5)

    def test_axis_and_values(self):
        self.call('bench', '--axis', 'regularizer', '--values', 'logdet,trace', '--M', '8', '--K', '2',
                  '--L', '50', '--trials', '2', '--max-iter', '5', '--jobs', '1', '--out', str(self.dir / 'b'))
        report = self.read_json('b', 'report.json')
        self.assertEqual(report['values'], ['logdet', 'trace'])
        self.assertEqual([p['trials'] for p in report['points']], [2, 2])

    def test_missing_axis_is_usage_error(self):
        self.assertExitCode(2, 'bench', '--out', str(self.dir / 'b'))
        self.assertExitCode(2, 'bench', '--axis', 'snr', '--out', str(self.dir / 'b'))
        self.assertExitCode(2, 'bench', '--preset', 'fig5', '--axis', 'sor', '--out', str(self.dir / 'b'))

    def test_zero_jobs_is_usage_error(self):
        self.assertExitCode(2, 'bench', '--axis', 'snr', '--values', '20', '--M', '8', '--K', '2', '--L', '50',
                            '--trials', '1', '--max-iter', '5', '--jobs', '0', '--out', str(self.dir / 'b'))

    @override_settings(RVOLMIN={'JOBS': 1})
    def test_unset_jobs_uses_setting(self):
        self.call('bench', '--axis', 'snr', '--values', '20', '--M', '8', '--K', '2', '--L', '50',
                  '--trials', '1', '--max-iter', '5', '--out', str(self.dir / 'b'))
        self.assertEqual(self.read_json('b', 'manifest.json')['config']['jobs'], 1)


class ConvergenceCommandTests(CommandTestCase):

    def test_traces_written(self):
        self.call('convergence', '--M', '10', '--K', '3', '--L', '80', '--outliers', '4',
                  '--max-iter', '15', '--tol', '0', '--out', str(self.dir / 'c'))
        lines = (self.dir / 'c' / 'convergence.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'iteration,extrapolated,plain')
        self.assertEqual(len(lines), 1 + 16)
        traces = self.read_json('c', 'report.json')['traces']
        self.assertEqual(len(traces), 1)
        self.assertEqual(traces[0]['extrapolated'][0], traces[0]['plain'][0])


class CheckScatterCommandTests(CommandTestCase):

    def scatter(self, S, name='S.csv'):
        path = write_matrix(self.dir / name, S)
        self.call('check_scatter', str(path), '--out', str(self.dir / 'r'))
        return self.read_json('r', 'report.json')

    def test_identity(self):
        report = self.scatter(np.eye(3))
        self.assertEqual(report['gamma'], 'inf')
        self.assertTrue(report['sufficiently_scattered'])

    def test_medial_triangle(self):
        report = self.scatter(MEDIAL)
        self.assertAlmostEqual(report['gamma'], 0.612372, places=6)
        self.assertFalse(report['sufficiently_scattered'])
        self.assertEqual(report['interior_facet_count'], 3)

    def test_infeasible_column_repaired(self):
        S = np.column_stack([np.eye(3), [0.6, 0.6, 0.0]])
        with self.assertLogs('apps.runs.management.commands.check_scatter', level='WARNING') as logs:
            report = self.scatter(S)
        self.assertIn('projecting', logs.output[0])
        self.assertEqual(report['gamma'], 'inf')

    def test_dimension_limit(self):
        path = write_matrix(self.dir / 'S6.csv', np.eye(6))
        error = self.assertExitCode(2, 'check_scatter', str(path), '--out', str(self.dir / 'r'))
        self.assertIn('N <= 5', str(error))


class RunRecordTests(TestCase):

    def test_record_from_manifest(self):
        manifest = RunManifest(command='synth', config={'snr_db': math.inf}, output_dir='/tmp/x',
                               outputs=['X.csv'], seed=3, wall_time=0.5)
        record = record_run('synth', manifest)
        self.assertEqual(record.seed, 3)
        self.assertEqual(record.config, {'snr_db': 'inf'})
        self.assertEqual(record.outputs, ['X.csv'])

    @override_settings(RVOLMIN={**DEFAULTS, 'RECORD_RUNS': False})
    def test_recording_can_be_switched_off(self):
        self.assertIsNone(record_run('synth'))
        self.assertFalse(RunRecord.objects.exists())
