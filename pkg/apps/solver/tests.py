import math

import numpy as np
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from apps.core.exceptions import InvalidArgumentError
from apps.core.matrices import FactorModel, simplex_violation
from apps.core.metrics import permutation_matched_mse
from apps.core.oracles import simplex_least_squares_oracle
from apps.core.linalg import spectral_bound
from apps.identifiability.geometry import CoeffCloud, scattering_radius
from apps.regularizers.volume import MajorizerMatrix, majorizer
from apps.synth.generators import SynthSpec, gen_instance

from .config import LAGGED, NONNEGATIVE, TOLERANCE, SolverConfig, SolverState
from .serializers import SolveReportSerializer, SolverConfigSerializer
from .services import RVolMinService, init_strategy, solve
from .updates import (
    basis_majorizer_value, coeff_majorizer_value, next_q, objective, outlier_scores, phi_p,
    project_basis, projected_gradient_step, stationarity_gap, update_B, update_C, update_weights,
)


def make_instance(seed, M=6, K=3, L=60, snr_db=None, n_outliers=0, sor_db=-10.0, pure=True):
    """Mixtures of K uniform endmembers with Dirichlet coefficients, optional noise and outliers."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(size=(M, K))
    S = rng.dirichlet(np.ones(K), size=L).T
    if pure:
        S[:, :K] = np.eye(K)
    clean = A @ S
    X = clean.copy()
    if snr_db is not None:
        noise = rng.normal(size=X.shape)
        power = np.mean(np.sum(clean ** 2, axis=0))
        noise *= math.sqrt(power / (10 ** (snr_db / 10)) / np.mean(np.sum(noise ** 2, axis=0)))
        X += noise
    outliers = np.array([], dtype=int)
    if n_outliers:
        outliers = rng.choice(np.arange(K, L), size=n_outliers, replace=False)
        O = rng.uniform(size=(M, n_outliers))
        power = np.mean(np.sum(clean ** 2, axis=0))
        O *= math.sqrt(power / (10 ** (sor_db / 10)) / np.mean(np.sum(O ** 2, axis=0)))
        X[:, outliers] = O
    return X, A, S, outliers


class ObjectiveTests(SimpleTestCase):

    def test_perfect_fit_is_zero(self):
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=1.0, tau=1e-14)
        self.assertAlmostEqual(objective(np.eye(2), np.eye(2), np.eye(2), config), 0.0, places=12)

    def test_single_column_by_hand(self):
        config = SolverConfig(p=1.0, epsilon=0.0, lambda_=0.0)
        value = objective(np.array([[1.0], [0.0]]), np.eye(2), np.array([[0.0], [1.0]]), config)
        self.assertAlmostEqual(value, 0.5 * math.sqrt(2.0), places=12)
        self.assertAlmostEqual(value, 0.70711, places=5)

    def test_matches_direct_formula(self):
        X, _, _, _ = make_instance(1, snr_db=20)
        rng = np.random.default_rng(2)
        B = rng.uniform(size=(6, 3))
        C = rng.dirichlet(np.ones(3), size=60).T
        for regularizer in ('logdet', 'det', 'trace'):
            config = SolverConfig(p=0.7, epsilon=1e-3, lambda_=0.4, tau=1e-6, regularizer=regularizer)
            fit = sum(0.5 * (np.sum((X[:, l] - B @ C[:, l]) ** 2) + 1e-3) ** 0.35 for l in range(60))
            gram = B.T @ B
            volume = {
                'logdet': np.linalg.slogdet(gram + 1e-6 * np.eye(3))[1],
                'det': np.linalg.det(gram),
                'trace': sum(np.sum((B[:, i] - B[:, j]) ** 2) for i in range(3) for j in range(i + 1, 3)),
            }[regularizer]
            self.assertAlmostEqual(objective(X, B, C, config), fit + 0.2 * volume, delta=1e-10)

    def test_infeasible_coefficients_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            objective(np.ones((2, 1)), np.eye(2), np.array([[0.6], [0.6]]), SolverConfig())


class WeightTests(SimpleTestCase):

    def test_quadratic_fit_gives_unit_weights(self):
        rng = np.random.default_rng(3)
        X, B = rng.normal(size=(4, 10)), rng.normal(size=(4, 2))
        C = rng.dirichlet(np.ones(2), size=10).T
        np.testing.assert_array_equal(update_weights(X, B, C, 2.0, 0.0), np.ones(10))

    def test_hand_values(self):
        X = np.array([[2.0, 0.0]])
        B = np.zeros((1, 1))
        C = np.ones((1, 2))
        weights = update_weights(X, B, C, 0.5, 0.0)
        self.assertAlmostEqual(weights[0], 0.0883883, places=7)
        self.assertTrue(np.isfinite(weights[1]))
        self.assertAlmostEqual(update_weights(X, B, C, 0.5, 1e-12)[1], 2.5e8, delta=1.0)

    def test_weights_minimize_fit_majorizer(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            x = rng.normal(scale=3.0)
            p = rng.uniform(0.1, 1.95)
            epsilon = 10 ** rng.uniform(-12, 0)
            target = (x * x + epsilon) ** (p / 2)
            w_opt = (p / 2) * (x * x + epsilon) ** ((p - 2) / 2)
            grid = np.concatenate([w_opt * np.geomspace(1e-3, 1e3, 2001), [w_opt]])
            values = grid * x * x + phi_p(grid, p, epsilon)
            at_opt = w_opt * x * x + phi_p(w_opt, p, epsilon)
            self.assertAlmostEqual(at_opt / target, 1.0, delta=1e-6)
            self.assertAlmostEqual(values.min() / target, 1.0, delta=1e-6)
            self.assertGreaterEqual(values.min(), at_opt * (1 - 1e-12))


class CoefficientUpdateTests(SimpleTestCase):

    def test_hand_step(self):
        C = projected_gradient_step(np.array([[1.0], [0.0]]), np.eye(2), np.array([[0.5], [0.5]]), 1.0)
        np.testing.assert_allclose(C[:, 0], [1.0, 0.0], atol=1e-15)

    def test_exact_minimizer_is_a_fixed_point(self):
        rng = np.random.default_rng(5)
        B = rng.normal(size=(5, 3))
        x = rng.normal(size=5)
        c_star = simplex_least_squares_oracle(B, x)
        stepped = projected_gradient_step(x[:, None], B, c_star[:, None], spectral_bound(B))
        np.testing.assert_allclose(stepped[:, 0], c_star, atol=1e-9)

    def test_iterates_converge_to_constrained_least_squares(self):
        rng = np.random.default_rng(6)
        B = rng.normal(size=(5, 3))
        X = rng.normal(size=(5, 20))
        L = spectral_bound(B)
        C = np.full((3, 20), 1 / 3)
        for _ in range(20000):
            C = projected_gradient_step(X, B, C, L)
        for l in range(20):
            np.testing.assert_allclose(C[:, l], simplex_least_squares_oracle(B, X[:, l]), atol=1e-6)

    def test_columns_update_independently(self):
        rng = np.random.default_rng(7)
        B, X = rng.normal(size=(5, 3)), rng.normal(size=(5, 12))
        Z = rng.dirichlet(np.ones(3), size=12).T
        full = projected_gradient_step(X, B, Z, 4.0)
        part = projected_gradient_step(X[:, 3:7], B, Z[:, 3:7], 4.0)
        np.testing.assert_allclose(full[:, 3:7], part, atol=1e-14)

    def test_momentum_sequence_increases(self):
        q = 1.0
        for _ in range(50):
            q_next = next_q(q)
            self.assertGreater(q_next, q)
            q = q_next


class BasisUpdateTests(SimpleTestCase):

    def _state(self, B, C, weights=None):
        weights = np.ones(C.shape[1]) if weights is None else weights
        return SolverState(FactorModel(B, C), weights, MajorizerMatrix.identity(B.shape[1]))

    def test_identity_coefficients_recover_data(self):
        X = np.random.default_rng(8).normal(size=(4, 3))
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.0)
        B = update_B(X, self._state(np.zeros((4, 3)), np.eye(3)), config)
        np.testing.assert_allclose(B, X, atol=1e-12)

    def test_single_column_is_data_mean(self):
        X = np.random.default_rng(9).normal(size=(4, 7))
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.0)
        B = update_B(X, self._state(np.zeros((4, 1)), np.ones((1, 7))), config)
        np.testing.assert_allclose(B[:, 0], X.mean(axis=1), atol=1e-12)

    def test_nonnegative_projection_clamps(self):
        config = SolverConfig(basis_constraint=NONNEGATIVE)
        np.testing.assert_array_equal(project_basis(np.array([[-1.0, 2.0]]), config), [[0.0, 2.0]])
        np.testing.assert_array_equal(project_basis(np.array([[-1.0, 2.0]]), SolverConfig()), [[-1.0, 2.0]])

    def test_nonnegative_step_stays_nonnegative(self):
        X, _, S, _ = make_instance(10, snr_db=10)
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.5, basis_constraint=NONNEGATIVE)
        B0 = np.random.default_rng(10).uniform(size=(6, 3))
        B = update_B(X, self._state(B0, S), config)
        self.assertTrue(np.all(B >= 0))

    def test_singular_system_falls_back_with_warning(self):
        X = np.random.default_rng(11).normal(size=(4, 5))
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.0)
        C = np.full((2, 5), 0.5)
        with self.assertLogs('apps.solver.updates', level='WARNING'):
            B = update_B(X, self._state(np.ones((4, 2)), C), config)
        np.testing.assert_allclose(B @ C, np.tile(X.mean(axis=1, keepdims=True), 5), atol=1e-10)

    def test_fallback_warning_logged_once_per_solve(self):
        X = np.random.default_rng(11).normal(size=(4, 5))
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.0)
        state = self._state(np.ones((4, 2)), np.full((2, 5), 0.5))
        with self.assertLogs('apps.solver.updates', level='WARNING') as logs:
            for _ in range(5):
                update_B(X, state, config)
        self.assertEqual(len(logs.records), 1)
        self.assertEqual(state.warned, {'ill_conditioned_basis'})


class SolveExampleTests(SimpleTestCase):

    def test_rank_one_fit(self):
        v = np.array([0.3, 1.2, 0.7, 2.0])
        X = np.tile(v[:, None], 6)
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.0, extrapolate=False)
        report = solve(X, 1, 'data_columns', config)
        np.testing.assert_allclose(report.model.basis[:, 0], v, atol=1e-12)
        np.testing.assert_array_equal(report.model.coeffs, np.ones((1, 6)))
        self.assertEqual(report.termination_reason, TOLERANCE)

    def test_noiseless_pure_pixel_recovery(self):
        X, A, S, _ = make_instance(12, M=5, K=3, L=200)
        self.assertTrue(scattering_radius(CoeffCloud(S)).sufficiently_scattered)
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=1e-3, max_iter=5000, tol=1e-12)
        report = solve(X, 3, 'data_columns', config)
        _, mse_db = permutation_matched_mse(A, report.model.basis)
        self.assertLessEqual(mse_db, -40.0)

    def test_rank_bounds(self):
        with self.assertRaises(InvalidArgumentError):
            solve(np.ones((3, 10)), 4)
        with self.assertRaises(InvalidArgumentError):
            solve(np.ones((3, 10)), 0)

    def test_iterations_never_exceed_cap(self):
        X, _, _, _ = make_instance(13, snr_db=20)
        report = solve(X, 3, 'random', SolverConfig(max_iter=7, tol=0.0))
        self.assertEqual(report.iterations_used, 7)
        self.assertEqual(report.termination_reason, 'max_iter')
        self.assertEqual(len(report.objective_history), 8)


class SolverPropertyTests(SimpleTestCase):

    def test_objective_is_monotone_without_extrapolation(self):
        violations = 0
        for seed in range(20):
            X, _, _, _ = make_instance(100 + seed, snr_db=20, n_outliers=4, sor_db=-5.0)
            for regularizer in ('logdet', 'trace', 'det'):
                for constraint in ('unconstrained', 'nonnegative'):
                    config = SolverConfig(
                        lambda_=0.5, regularizer=regularizer, basis_constraint=constraint,
                        extrapolate=False, max_iter=30, tol=0.0, rng_seed=seed,
                    )
                    history = solve(X, 3, 'data_columns', config).objective_history
                    for before, after in zip(history, history[1:]):
                        if after > before + 1e-9 * (1 + abs(before)):
                            violations += 1
        self.assertEqual(violations, 0)

    def test_majorizers_are_valid_every_iteration(self):
        X, _, _, _ = make_instance(14, snr_db=20, n_outliers=5, sor_db=-5.0)
        for regularizer in ('logdet', 'trace', 'det'):
            config = SolverConfig(lambda_=0.5, regularizer=regularizer, extrapolate=False)
            service = RVolMinService(config)
            state = service.initial_state(X, init_strategy(X, 3, 'data_columns', 3))
            for _ in range(15):
                B, C = state.model.basis, state.model.coeffs
                C_new = update_C(X, state, config)
                value = objective(X, B, C_new, config)
                u_C = coeff_majorizer_value(X, B, C_new, C, state.step_L, state.weights, config)
                self.assertGreaterEqual(u_C, value - 1e-9 * (1 + abs(value)))

                state.model.coeffs = C_new
                state.weights = update_weights(X, B, C_new, config.p, config.epsilon)
                tight = basis_majorizer_value(X, B, C_new, state.weights, state.F, config)
                self.assertAlmostEqual(tight, value, delta=1e-8 * (1 + abs(value)))

                B_new = update_B(X, state, config)
                value = objective(X, B_new, C_new, config)
                u_B = basis_majorizer_value(X, B_new, C_new, state.weights, state.F, config)
                self.assertGreaterEqual(u_B, value - 1e-9 * (1 + abs(value)))

                state.model.basis = B_new
                state.weights = update_weights(X, B_new, C_new, config.p, config.epsilon)
                state.F = majorizer(B_new, config.regularizer_kind)

    def test_feasible_bounded_iterates(self):
        X, _, _, _ = make_instance(15, snr_db=15, n_outliers=6, sor_db=-5.0)

        def check(state):
            self.assertLessEqual(simplex_violation(state.model.coeffs), 1e-12)
            self.assertLessEqual(np.linalg.norm(state.model.basis, 2), 1e6)

        for regularizer in ('logdet', 'trace', 'det'):
            solve(X, 3, 'data_columns', SolverConfig(regularizer=regularizer, max_iter=100), callback=check)

    def test_quadratic_fit_keeps_unit_weights(self):
        X, _, _, _ = make_instance(16, snr_db=20)

        def check(state):
            np.testing.assert_array_equal(state.weights, np.ones(X.shape[1]))

        report = solve(X, 3, 'data_columns', SolverConfig(p=2.0, epsilon=0.0, max_iter=50), callback=check)
        np.testing.assert_array_equal(report.weights, np.ones(X.shape[1]))

    def test_stationary_at_termination(self):
        X, A, _, _ = make_instance(17, M=5, K=3, L=40)
        config = SolverConfig(p=2.0, epsilon=0.0, lambda_=0.01, extrapolate=False,
                              max_iter=20000, tol=1e-15)
        start = FactorModel(A + 0.05, np.full((3, 40), 1 / 3))
        report = solve(X, 3, start, config)
        gap_C, gap_B = stationarity_gap(X, report.model.basis, report.model.coeffs, config)
        self.assertLessEqual(gap_C, 1e-4)
        self.assertLessEqual(gap_B, 1e-4)

    def test_outliers_are_downweighted(self):
        X, _, _, outliers = make_instance(18, M=20, K=3, L=300, snr_db=30, n_outliers=30, sor_db=-10.0)
        report = solve(X, 3, 'data_columns', SolverConfig(p=0.5, lambda_=1.0, rng_seed=1))
        clean = np.setdiff1d(np.arange(300), outliers)
        median = np.median(report.weights[clean])
        separated = np.mean(report.weights[outliers] < median)
        self.assertGreaterEqual(separated, 0.95)

    def test_robust_fit_beats_least_squares_under_outliers(self):
        wins, gaps = 0, []
        for seed in range(5):
            instance = gen_instance(SynthSpec(M=20, K=3, L=300, snr_db=25.0, sor_db=-10.0,
                                              n_outliers=15, rng_seed=seed))
            least_squares = solve(instance.X, 3, 'data_columns', SolverConfig(p=2.0, epsilon=0.0, lambda_=0.5))
            robust = solve(instance.X, 3, 'data_columns', SolverConfig(p=0.5, epsilon=1e-12, lambda_=0.5))
            _, ls_db = permutation_matched_mse(instance.A_true, least_squares.model.basis)
            _, robust_db = permutation_matched_mse(instance.A_true, robust.model.basis)
            wins += robust_db < ls_db
            gaps.append(ls_db - robust_db)
        self.assertGreaterEqual(wins, 4)
        self.assertGreater(np.mean(gaps), 0.0)

    def test_lagged_schedule_and_restart_run(self):
        X, _, _, _ = make_instance(19, snr_db=20)
        for config in (SolverConfig(weight_schedule=LAGGED, max_iter=40),
                       SolverConfig(restart_extrapolation=True, max_iter=40)):
            report = solve(X, 3, 'data_columns', config)
            self.assertLessEqual(simplex_violation(report.model.coeffs), 1e-12)
            self.assertTrue(np.all(np.isfinite(report.objective_history)))


class InitStrategyTests(SimpleTestCase):

    def test_provided_feasible_model_unchanged(self):
        B = np.random.default_rng(20).normal(size=(3, 2))
        C = np.array([[0.25, 1.0, 0.5], [0.75, 0.0, 0.5]])
        model = init_strategy(np.ones((3, 3)), 2, 'provided', provided=FactorModel(B, C))
        np.testing.assert_array_equal(model.basis, B)
        np.testing.assert_array_equal(model.coeffs, C)

    def test_provided_infeasible_column_repaired(self):
        C = np.array([[0.6], [0.6]])
        with self.assertLogs('apps.solver.services', level='WARNING'):
            model = init_strategy(np.ones((2, 1)), 2, 'provided', provided=FactorModel(np.eye(2), C))
        np.testing.assert_allclose(model.coeffs[:, 0], [0.5, 0.5], atol=1e-15)

    def test_data_columns_are_seeded_and_distinct(self):
        X = np.random.default_rng(21).normal(size=(4, 30))
        first = init_strategy(X, 3, 'data_columns', rng_seed=5)
        second = init_strategy(X, 3, 'data_columns', rng_seed=5)
        np.testing.assert_array_equal(first.basis, second.basis)
        self.assertEqual(len({tuple(col) for col in first.basis.T}), 3)
        np.testing.assert_array_equal(first.coeffs, np.full((3, 30), 1 / 3))

    def test_random_basis_is_unit_uniform(self):
        model = init_strategy(np.ones((5, 8)), 3, 'random', rng_seed=2)
        self.assertTrue(np.all((model.basis >= 0) & (model.basis < 1)))

    def test_too_many_columns_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            init_strategy(np.ones((5, 2)), 3, 'data_columns')


class SerializerTests(SimpleTestCase):

    def test_config_serializer_builds_config(self):
        serializer = SolverConfigSerializer(data={'p': 1.5, 'lambda_': 0.2, 'regularizer': 'trace'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual((config.p, config.lambda_, config.regularizer), (1.5, 0.2, 'trace'))

    def test_epsilon_rule(self):
        serializer = SolverConfigSerializer(data={'p': 0.5, 'epsilon': 0.0})
        self.assertFalse(serializer.is_valid())
        self.assertIn('epsilon', serializer.errors)
        with self.assertRaises(ValidationError):
            SolverConfigSerializer(data={'p': 3.0}).is_valid(raise_exception=True)

    def test_report_schema(self):
        X, _, _, _ = make_instance(22)
        report = solve(X, 3, 'data_columns', SolverConfig(max_iter=3, tol=0.0))
        data = SolveReportSerializer(report).data
        self.assertEqual(data['iterations_used'], 3)
        self.assertEqual(len(data['objective_history']), 4)
        self.assertEqual(data['config']['regularizer'], 'logdet')

    def test_outlier_scores(self):
        np.testing.assert_allclose(outlier_scores([1.0, 0.5, 0.25]), [0.0, 1 / 3, 1.0])
        np.testing.assert_array_equal(outlier_scores([2.0, 2.0]), [0.0, 0.0])
