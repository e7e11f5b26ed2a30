import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import InvalidArgumentError, SingularMatrixError

from .volume import (
    MajorizerMatrix, RegularizerKind, det_gradient, logdet_bound, logdet_majorizer_value,
    majorizer, pairwise_distance_volume, trace_matrix, vol_gradient, vol_value,
)


def _random_orthogonal(rng, size):
    Q, R = np.linalg.qr(rng.normal(size=(size, size)))
    return Q * np.sign(np.diag(R))


class VolValueTests(SimpleTestCase):

    def test_identity_log_det_is_zero(self):
        self.assertAlmostEqual(vol_value(np.eye(3), RegularizerKind.log_det(1e-14)), 0.0, places=12)

    def test_det_of_diagonal(self):
        self.assertAlmostEqual(vol_value(np.diag([2.0, 3.0]), RegularizerKind.det()), 36.0, places=10)

    def test_trace_of_unit_pair(self):
        B = np.eye(2)
        self.assertAlmostEqual(vol_value(B, RegularizerKind.trace_dist()), 2.0, places=12)
        self.assertAlmostEqual(pairwise_distance_volume(B), 2.0, places=12)

    def test_trace_formula_matches_double_sum(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            B = rng.normal(size=(7, int(rng.integers(1, 6))))
            self.assertAlmostEqual(
                vol_value(B, RegularizerKind.trace_dist()), pairwise_distance_volume(B), delta=1e-10
            )

    def test_trace_matrix_vanishes_for_single_column(self):
        np.testing.assert_array_equal(trace_matrix(1), [[0.0]])

    def test_orthonormal_invariance(self):
        rng = np.random.default_rng(1)
        kinds = (RegularizerKind.log_det(1e-8), RegularizerKind.det(), RegularizerKind.trace_dist())
        for _ in range(20):
            B = rng.normal(size=(6, 3))
            Q = _random_orthogonal(rng, 6)
            for kind in kinds:
                expected = vol_value(B, kind)
                self.assertAlmostEqual(vol_value(Q @ B, kind), expected, delta=1e-9 * (1 + abs(expected)))

    def test_rejects_non_finite_basis(self):
        with self.assertRaises(InvalidArgumentError):
            vol_value(np.array([[np.nan]]), RegularizerKind.det())

    def test_kind_validation(self):
        with self.assertRaises(InvalidArgumentError):
            RegularizerKind('volume')
        with self.assertRaises(InvalidArgumentError):
            RegularizerKind.log_det(0.0)
        self.assertFalse(RegularizerKind.det().has_quadratic_majorizer)


class MajorizerTests(SimpleTestCase):

    def test_orthonormal_columns_give_identity(self):
        Q = _random_orthogonal(np.random.default_rng(2), 5)[:, :3]
        F = majorizer(Q, RegularizerKind.log_det(1e-14))
        np.testing.assert_allclose(F.F, np.eye(3), atol=1e-10)

    def test_scalar_case(self):
        F = majorizer(np.array([[2.0]]), RegularizerKind.log_det(1.0))
        np.testing.assert_allclose(F.F, [[0.2]], atol=1e-15)

    def test_multiply_back(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            B = rng.normal(size=(8, 4))
            F = majorizer(B, RegularizerKind.log_det(1e-8))
            np.testing.assert_allclose(F.F @ (B.T @ B + 1e-8 * np.eye(4)), np.eye(4), atol=1e-8)

    def test_trace_and_det(self):
        B = np.random.default_rng(4).normal(size=(5, 3))
        np.testing.assert_array_equal(majorizer(B, RegularizerKind.trace_dist()).F, trace_matrix(3))
        self.assertIsNone(majorizer(B, RegularizerKind.det()))

    def test_bound_is_tight_at_expansion_point(self):
        rng = np.random.default_rng(5)
        tau = 1e-8
        B0 = rng.normal(size=(6, 3))
        F = majorizer(B0, RegularizerKind.log_det(tau))
        exact = vol_value(B0, RegularizerKind.log_det(tau))
        self.assertAlmostEqual(logdet_majorizer_value(B0, F, tau), exact, delta=1e-9)
        for _ in range(100):
            B = rng.normal(scale=rng.uniform(0.1, 3.0), size=(6, 3))
            self.assertGreaterEqual(
                logdet_majorizer_value(B, F, tau), vol_value(B, RegularizerKind.log_det(tau)) - 1e-9
            )

    def test_inverse_minimizes_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            K = int(rng.integers(2, 6))
            R = rng.normal(size=(K, K))
            E = R @ R.T + 0.5 * np.eye(K)
            F_star = np.linalg.inv(E)
            best = logdet_bound(F_star, E)
            self.assertAlmostEqual(best, np.linalg.slogdet(E)[1], delta=1e-8)
            for _ in range(20):
                D = rng.normal(size=(K, K))
                D = D @ D.T
                step = rng.uniform(1e-3, 1.0) / np.linalg.norm(D, 2)
                F = F_star + step * D * np.linalg.norm(F_star, 2)
                self.assertGreaterEqual(logdet_bound(F, E), best - 1e-12)

    def test_ill_conditioned_basis_warns(self):
        B = np.array([[1.0, 1.0], [0.0, 0.0]])
        with self.assertLogs('apps.regularizers.volume', level='WARNING') as captured:
            majorizer(B, RegularizerKind.log_det(1e-14))
        self.assertIn('[REGULARIZER]', captured.output[0])

    def test_matrix_validation(self):
        with self.assertRaises(InvalidArgumentError):
            MajorizerMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with self.assertRaises(InvalidArgumentError):
            MajorizerMatrix(-np.eye(2))


class DetGradientTests(SimpleTestCase):

    def test_identity(self):
        np.testing.assert_allclose(det_gradient(np.eye(3)), 2 * np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(det_gradient(np.diag([2.0, 3.0])), np.diag([36.0, 24.0]), atol=1e-10)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(7)
        B = rng.normal(size=(6, 3))
        h = 1e-6
        numeric = np.zeros_like(B)
        for index in np.ndindex(*B.shape):
            step = np.zeros_like(B)
            step[index] = h
            numeric[index] = (np.linalg.det((B + step).T @ (B + step))
                              - np.linalg.det((B - step).T @ (B - step))) / (2 * h)
        analytic = det_gradient(B)
        self.assertLessEqual(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric), 1e-4)

    def test_singular_gram_raises(self):
        with self.assertRaises(SingularMatrixError):
            det_gradient(np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]]))

    def test_log_det_and_trace_gradients(self):
        rng = np.random.default_rng(8)
        B = rng.normal(size=(5, 3))
        h = 1e-6
        for kind in (RegularizerKind.log_det(1e-3), RegularizerKind.trace_dist()):
            numeric = np.zeros_like(B)
            for index in np.ndindex(*B.shape):
                step = np.zeros_like(B)
                step[index] = h
                numeric[index] = (vol_value(B + step, kind) - vol_value(B - step, kind)) / (2 * h)
            np.testing.assert_allclose(vol_gradient(B, kind), numeric, rtol=1e-5, atol=1e-6)
