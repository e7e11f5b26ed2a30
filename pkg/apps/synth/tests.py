import math
import os
import unittest
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from apps.core.exceptions import NumericFailureError, ParameterError
from apps.core.metrics import mean_column_power
from apps.core.matrices import simplex_violation
from apps.solver.config import NONNEGATIVE, SolverConfig

from .generators import ILL_CONDITIONED, SynthSpec, gen_instance
from .serializers import ConvergenceTraceSerializer, SweepResultSerializer, SynthSpecSerializer
from .sweeps import (
    LAMBDA, OUTLIERS, PRESETS, REGULARIZER, SNR, apply_axis, convergence_traces, iterations_to_target,
    parse_axis_value, run_sweep,
)

SLOW = bool(os.environ.get('RVOLMIN_SLOW_TESTS'))

SMALL = dict(M=12, K=3, L=150, snr_db=30.0, sor_db=-5.0, n_outliers=6)


class GenInstanceTests(SimpleTestCase):

    def test_clean_limit(self):
        instance = gen_instance(SynthSpec(M=8, K=3, L=40, rng_seed=3))
        np.testing.assert_array_equal(instance.X.values, instance.A_true @ instance.S_true)
        self.assertEqual(instance.outlier_indices, ())
        self.assertEqual(instance.realized_snr_db, math.inf)

    def test_same_seed_same_draws(self):
        spec = SynthSpec(**SMALL, rng_seed=7)
        first, second = gen_instance(spec), gen_instance(spec)
        np.testing.assert_array_equal(first.X.values, second.X.values)
        np.testing.assert_array_equal(first.A_true, second.A_true)
        self.assertEqual(first.outlier_indices, second.outlier_indices)
        other = gen_instance(spec.with_seed(8))
        self.assertFalse(np.array_equal(first.A_true, other.A_true))

    def test_realized_ratios_hit_targets(self):
        for seed in range(5):
            spec = SynthSpec(M=20, K=4, L=200, snr_db=17.5, sor_db=-7.0, n_outliers=10, rng_seed=seed)
            instance = gen_instance(spec)
            self.assertAlmostEqual(instance.realized_snr_db, 17.5, delta=1e-9)
            self.assertAlmostEqual(instance.realized_sor_db, -7.0, delta=1e-9)

    def test_outliers_replace_columns(self):
        instance = gen_instance(SynthSpec(**SMALL, rng_seed=1))
        outliers = list(instance.outlier_indices)
        self.assertEqual(len(set(outliers)), SMALL['n_outliers'])
        clean_columns = np.setdiff1d(np.arange(SMALL['L']), outliers)
        np.testing.assert_allclose(
            instance.X.values[:, clean_columns],
            (instance.clean + instance.noise)[:, clean_columns], rtol=0, atol=1e-12,
        )
        power = mean_column_power(instance.X.values, outliers)
        self.assertAlmostEqual(10 * math.log10(mean_column_power(instance.clean) / power), -5.0, delta=1e-9)
        self.assertTrue(np.all(instance.X.values[:, outliers] >= 0))

    def test_purity_and_feasibility(self):
        instance = gen_instance(SynthSpec(M=10, K=4, L=500, purity_level=0.85, rng_seed=2))
        self.assertLessEqual(instance.S_true.max(), 0.85)
        self.assertLessEqual(simplex_violation(instance.S_true), 1e-12)
        self.assertEqual(instance.S_true.shape, (4, 500))

    def test_ill_conditioned_basis(self):
        spec = SynthSpec(M=50, K=5, L=100, basis_kind=ILL_CONDITIONED, rng_seed=4)
        instance = gen_instance(spec)
        self.assertAlmostEqual(np.linalg.cond(instance.A_true) / 1000.0, 1.0, delta=1e-6)
        np.testing.assert_allclose(
            np.linalg.svd(instance.A_true, compute_uv=False), [1, 0.1, 0.01, 0.005, 0.001], rtol=1e-9,
        )

    def test_invalid_specs(self):
        with self.assertRaises(ParameterError):
            SynthSpec(K=4, purity_level=0.25)
        with self.assertRaises(ParameterError):
            SynthSpec(L=10, n_outliers=11, sor_db=0.0)
        with self.assertRaises(ParameterError):
            SynthSpec(n_outliers=3)
        with self.assertRaises(ParameterError):
            SynthSpec(K=3, basis_kind=ILL_CONDITIONED)
        with self.assertRaises(ParameterError):
            SynthSpec(basis_kind='banded')

    def test_rejection_budget(self):
        with self.assertRaises(ParameterError):
            gen_instance(SynthSpec(M=3, K=3, L=1, purity_level=1 / 3 + 1e-9))


class SweepTests(SimpleTestCase):

    def setUp(self):
        self.spec = SynthSpec(**SMALL, rng_seed=11)
        self.config = SolverConfig(max_iter=40, lambda_=0.5)

    def test_reproducible(self):
        first = run_sweep(self.spec, SNR, [30.0, 40.0], trials=2, solver_config=self.config)
        second = run_sweep(self.spec, SNR, [30.0, 40.0], trials=2, solver_config=self.config)
        self.assertEqual([r.mse_db for r in first.records], [r.mse_db for r in second.records])
        self.assertEqual([r.seed for r in first.records], [r.seed for r in second.records])
        self.assertEqual(len({r.seed for r in first.records}), 4)
        self.assertEqual([p.trials for p in first.points()], [2, 2])

    def test_schedule_invariant(self):
        serial = run_sweep(self.spec, OUTLIERS, [3, 6], trials=2, solver_config=self.config, jobs=1)
        parallel = run_sweep(self.spec, OUTLIERS, [3, 6], trials=2, solver_config=self.config, jobs=2)
        self.assertEqual([r.seed for r in serial.records], [r.seed for r in parallel.records])
        # worker processes may run BLAS with a different thread count
        np.testing.assert_allclose(
            [r.mse_db for r in serial.records], [r.mse_db for r in parallel.records], rtol=0, atol=1e-6,
        )

    def test_failed_trials_are_counted_not_averaged(self):
        with mock.patch('apps.synth.sweeps.solve', side_effect=NumericFailureError('boom')):
            result = run_sweep(self.spec, SNR, [30.0], trials=3, solver_config=self.config)
        self.assertEqual(result.failures, 3)
        point = result.points()[0]
        self.assertEqual(point.failures, 3)
        self.assertTrue(math.isnan(point.mean_mse_db))
        self.assertIn('NumericFailureError', result.records[0].error)

    def test_aggregates(self):
        result = run_sweep(self.spec, LAMBDA, [0.5], trials=3, solver_config=self.config)
        values = [r.mse_db for r in result.records]
        point = result.points()[0]
        self.assertAlmostEqual(point.mean_mse_db, float(np.mean(values)), places=12)
        self.assertAlmostEqual(point.median_mse_db, float(np.median(values)), places=12)

    def test_axis_application(self):
        spec, config = apply_axis(self.spec, self.config, REGULARIZER, 'trace')
        self.assertEqual(config.regularizer, 'trace')
        self.assertIs(spec, self.spec)
        spec, config = apply_axis(self.spec, self.config, SNR, 12.0)
        self.assertEqual(spec.snr_db, 12.0)
        self.assertIs(config, self.config)

    def test_axis_parsing(self):
        self.assertEqual(parse_axis_value('k', '4'), 4)
        self.assertEqual(parse_axis_value('snr', 'inf'), math.inf)
        with self.assertRaises(ParameterError):
            parse_axis_value('regularizer', 'nuclear')
        with self.assertRaises(ParameterError):
            parse_axis_value('gamma', 1.0)
        with self.assertRaises(ParameterError):
            run_sweep(self.spec, SNR, [30.0], trials=0)

    def test_presets_encode_experiment_settings(self):
        fig5 = PRESETS['fig5']
        self.assertEqual(fig5.axis, SNR)
        self.assertEqual(fig5.values, (15.0, 20.0, 25.0, 30.0, 35.0))
        self.assertEqual((fig5.spec['M'], fig5.spec['K'], fig5.spec['L']), (50, 5, 1000))
        self.assertEqual(fig5.spec['n_outliers'], 20)
        self.assertEqual(fig5.spec['sor_db'], -5.0)
        self.assertEqual(PRESETS['fig7'].values, (10, 20, 30, 40, 50, 60))
        self.assertEqual(PRESETS['table1'].spec['basis_kind'], ILL_CONDITIONED)
        for preset in PRESETS.values():
            SynthSpec(**preset.spec)

    def test_report_schema(self):
        result = run_sweep(self.spec, SNR, [math.inf], trials=1, solver_config=self.config)
        data = SweepResultSerializer(result).data
        self.assertEqual(data['axis'], 'snr')
        self.assertEqual(data['values'], ['inf'])
        self.assertEqual(data['points'][0]['trials'], 1)
        self.assertEqual(data['base_spec']['sor_db'], -5.0)
        self.assertEqual(data['solver_config']['max_iter'], 40)
        self.assertEqual(len(data['records']), 1)


class ConvergenceTraceTests(SimpleTestCase):

    def test_iterations_to_target(self):
        self.assertEqual(iterations_to_target([5.0, 3.0, 2.0, 1.0], 2.5), 2)
        self.assertIsNone(iterations_to_target([5.0, 3.0], 1.0))

    def test_traces_share_start(self):
        spec = SynthSpec(**SMALL, rng_seed=5)
        traces = convergence_traces(spec, SolverConfig(max_iter=30, tol=0.0), trials=1)
        trace = traces[0]
        self.assertEqual(trace.extrapolated[0], trace.plain[0])
        self.assertEqual(len(trace.plain), 31)
        self.assertIsNotNone(trace.extrapolated_iterations)
        data = ConvergenceTraceSerializer(trace).data
        self.assertEqual(len(data['extrapolated']), len(trace.extrapolated))


class SynthSpecSerializerTests(SimpleTestCase):

    def test_builds_spec(self):
        serializer = SynthSpecSerializer(data={'M': 5, 'K': 2, 'L': 10, 'snr_db': 'inf', 'rng_seed': 3})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        spec = serializer.save()
        self.assertEqual(spec.snr_db, math.inf)
        self.assertEqual(spec.purity_level, 0.85)

    def test_rejects_bad_purity_and_outliers(self):
        serializer = SynthSpecSerializer(data={'M': 5, 'K': 4, 'L': 10, 'purity_level': 0.2})
        self.assertFalse(serializer.is_valid())
        self.assertIn('purity_level', serializer.errors)
        serializer = SynthSpecSerializer(data={'M': 5, 'K': 2, 'L': 10, 'n_outliers': 2})
        self.assertFalse(serializer.is_valid())
        self.assertIn('sor_db', serializer.errors)
        with self.assertRaises(ValidationError):
            SynthSpecSerializer(data={'M': 5, 'K': 2, 'L': 3, 'n_outliers': 4, 'sor_db': 0}).is_valid(
                raise_exception=True)


@unittest.skipUnless(SLOW, 'set RVOLMIN_SLOW_TESTS=1 to run Monte-Carlo acceptance checks')
class MonteCarloAcceptanceTests(SimpleTestCase):
    """Full-size experiments: (M, K, L) = (50, 5, 1000), N_o = 20, 10 trials."""

    base = dict(M=50, K=5, L=1000, n_outliers=20)

    def test_uniform_basis_at_25db(self):
        spec = SynthSpec(**self.base, snr_db=25.0, sor_db=-5.0, rng_seed=2024)
        result = run_sweep(spec, SNR, [25.0], trials=10, solver_config=SolverConfig(p=0.5, lambda_=0.5))
        self.assertEqual(result.failures, 0)
        self.assertLessEqual(result.points()[0].mean_mse_db, -25.0)

    def test_regularizer_ordering(self):
        spec = SynthSpec(**self.base, snr_db=20.0, sor_db=-5.0, rng_seed=2025)
        result = run_sweep(spec, REGULARIZER, ['logdet', 'trace', 'det'], trials=10,
                           solver_config=SolverConfig(p=0.5, lambda_=1.0))
        means = {point.axis_value: point.mean_mse_db for point in result.points()}
        self.assertLessEqual(means['logdet'], -25.0)
        self.assertLessEqual(means['trace'], -22.0)
        self.assertLessEqual(means['logdet'], means['trace'])
        self.assertLessEqual(means['trace'], means['det'])

    def test_flat_in_number_of_outliers(self):
        spec = SynthSpec(**self.base, snr_db=20.0, sor_db=-5.0, rng_seed=2026)
        result = run_sweep(spec, OUTLIERS, [10, 20, 30, 40, 50, 60], trials=10,
                           solver_config=SolverConfig(p=0.5, lambda_=1.0))
        means = [point.mean_mse_db for point in result.points()]
        self.assertLessEqual(max(means) - min(means), 5.0)

    def test_extrapolation_speedup(self):
        spec = SynthSpec(**self.base, snr_db=18.0, sor_db=-5.0, rng_seed=2027)
        config = SolverConfig(max_iter=3000, tol=1e-5)
        trace = convergence_traces(spec, config, trials=1)[0]
        self.assertIsNotNone(trace.extrapolated_iterations)
        # an unreached plain target is measured against the iteration cap
        plain_iterations = trace.plain_iterations if trace.plain_iterations is not None else config.max_iter
        self.assertLessEqual(trace.extrapolated_iterations, 0.5 * plain_iterations)

    def test_nonnegative_basis_matches_unconstrained(self):
        spec = SynthSpec(**self.base, snr_db=18.0, sor_db=5.0, rng_seed=2028)
        plain = run_sweep(spec, SNR, [18.0], trials=3, solver_config=SolverConfig())
        nonneg = run_sweep(spec, SNR, [18.0], trials=3,
                           solver_config=SolverConfig(basis_constraint=NONNEGATIVE))
        self.assertLessEqual(abs(plain.points()[0].mean_mse_db - nonneg.points()[0].mean_mse_db), 3.0)
