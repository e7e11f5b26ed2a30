import math

import numpy as np
from django.test import SimpleTestCase

from .exceptions import InvalidArgumentError
from .fields import ExtendedFloatField
from .linalg import psd_norm_bound, spectral_bound
from .matrices import DataMatrix, FactorModel, check_simplex_columns
from .metrics import (
    MetricConfig, brute_force_matched_mse, permutation_matched_mse, snr_db, sor_db,
)
from .oracles import simplex_projection_oracle
from .simplex import project_simplex, project_simplex_columns


class ProjectSimplexTests(SimpleTestCase):

    def test_feasible_point_is_unchanged(self):
        np.testing.assert_allclose(project_simplex([0.3, 0.7]), [0.3, 0.7], atol=1e-15)

    def test_symmetric_point_projects_to_uniform(self):
        np.testing.assert_allclose(project_simplex([0.4, 0.4, 0.4]), [1 / 3] * 3, atol=1e-15)

    def test_outside_point_projects_to_vertex(self):
        np.testing.assert_array_equal(project_simplex([2.0, 0.0]), [1.0, 0.0])

    def test_single_coordinate(self):
        np.testing.assert_array_equal(project_simplex([-7.5]), [1.0])

    def test_non_finite_input_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            project_simplex([0.1, np.nan])
        with self.assertRaises(InvalidArgumentError):
            project_simplex([np.inf, 0.0])

    def test_empty_input_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            project_simplex([])

    def test_matches_active_set_oracle(self):
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(1000):
            K = int(rng.integers(2, 11))
            v = rng.normal(scale=rng.choice([0.1, 1.0, 10.0]), size=K)
            u = project_simplex(v)
            self.assertTrue(np.all(u >= 0))
            self.assertAlmostEqual(u.sum(), 1.0, delta=1e-12)
            worst = max(worst, float(np.max(np.abs(u - simplex_projection_oracle(v)))))
        self.assertLessEqual(worst, 1e-8)

    def test_idempotent_and_translation_equivariant(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            v = rng.normal(size=int(rng.integers(2, 9)))
            u = project_simplex(v)
            np.testing.assert_allclose(project_simplex(u), u, atol=1e-12)
            t = rng.normal(scale=5.0)
            np.testing.assert_allclose(project_simplex(v + t), u, atol=1e-12)

    def test_columns_are_independent(self):
        rng = np.random.default_rng(5)
        V = rng.normal(size=(4, 30))
        P = project_simplex_columns(V)
        for j in (0, 7, 29):
            np.testing.assert_array_equal(P[:, j], project_simplex_columns(V[:, [j]])[:, 0])


class SpectralBoundTests(SimpleTestCase):

    def test_identity(self):
        bound = spectral_bound(np.eye(3))
        self.assertGreaterEqual(bound, 1.0)
        self.assertLessEqual(bound, 3.0)

    def test_diagonal(self):
        bound = spectral_bound(np.diag([3.0, 1.0]))
        self.assertGreaterEqual(bound, 9.0)
        self.assertLessEqual(bound, 10.0)

    def test_zero_matrix(self):
        self.assertEqual(spectral_bound(np.zeros((4, 2))), 0.0)

    def test_start_orthogonal_to_ones(self):
        # top eigenvector of B^T B is (1, -1)/sqrt(2)
        B = np.array([[2.0, -1.0], [-1.0, 2.0]])
        truth = np.linalg.norm(B, 2) ** 2
        self.assertGreaterEqual(spectral_bound(B), truth)

    def test_bounds_true_norm_on_random_matrices(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            B = rng.normal(size=(10, 4))
            truth = np.linalg.svd(B, compute_uv=False)[0] ** 2
            bound = spectral_bound(B)
            self.assertGreaterEqual(bound, truth * (1 - 1e-12))
            trace = np.sum(B * B)
            self.assertLessEqual(bound, trace + 1e-9)
            if bound < trace:
                # the power-iteration estimate was accepted
                self.assertLessEqual(bound / truth, 1.1)

    def test_psd_bound_dominates_top_eigenvalue(self):
        rng = np.random.default_rng(2)
        R = rng.normal(size=(5, 5))
        H = R @ R.T
        self.assertGreaterEqual(psd_norm_bound(H), np.linalg.eigvalsh(H)[-1] * (1 - 1e-12))


class PermutationMatchedMSETests(SimpleTestCase):

    def test_identical_bases(self):
        A = np.random.default_rng(0).uniform(size=(6, 3))
        mse, mse_db = permutation_matched_mse(A, A)
        self.assertEqual(mse, 0.0)
        self.assertEqual(mse_db, MetricConfig().mse_floor_db)

    def test_permuted_and_scaled_columns(self):
        A = np.random.default_rng(1).uniform(size=(6, 4))
        A_est = A[:, [2, 0, 3, 1]] * np.array([3.0, 0.5, 7.0, 1.5])
        mse, _ = permutation_matched_mse(A, A_est)
        self.assertAlmostEqual(mse, 0.0, places=14)

    def test_hand_computed_pair(self):
        A = np.eye(2)
        A_est = np.column_stack([[0.0, 1.0], [1 / math.sqrt(2), 1 / math.sqrt(2)]])
        mse, mse_db = permutation_matched_mse(A, A_est)
        self.assertAlmostEqual(mse, (2 - math.sqrt(2)) / 2, places=12)
        self.assertAlmostEqual(mse_db, -5.333, places=3)

    def test_matches_brute_force_and_symmetries(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            K = int(rng.integers(2, 7))
            A = rng.uniform(size=(8, K))
            A_est = rng.uniform(size=(8, K))
            mse, _ = permutation_matched_mse(A, A_est)
            self.assertAlmostEqual(mse, brute_force_matched_mse(A, A_est), places=12)
            perm = rng.permutation(K)
            self.assertAlmostEqual(permutation_matched_mse(A[:, perm], A_est[:, perm])[0], mse, places=12)
            scale = rng.uniform(0.1, 10.0, size=K)
            self.assertAlmostEqual(permutation_matched_mse(A * scale, A_est)[0], mse, places=12)

    def test_shape_mismatch_and_zero_column(self):
        with self.assertRaises(InvalidArgumentError):
            permutation_matched_mse(np.ones((3, 2)), np.ones((3, 3)))
        with self.assertRaises(InvalidArgumentError):
            permutation_matched_mse(np.ones((3, 2)), np.column_stack([np.ones(3), np.zeros(3)]))

    def test_floor_must_be_negative(self):
        with self.assertRaises(InvalidArgumentError):
            MetricConfig(mse_floor_db=0.0)


class RatioTests(SimpleTestCase):

    def setUp(self):
        self.clean = np.random.default_rng(6).uniform(size=(5, 40))

    def test_equal_power_is_zero_db(self):
        self.assertAlmostEqual(snr_db(self.clean, self.clean.copy()), 0.0, places=12)

    def test_tenth_power_is_ten_db(self):
        noise = self.clean * math.sqrt(0.1)
        self.assertAlmostEqual(snr_db(self.clean, noise), 10.0, places=10)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(7)
        noise = rng.normal(size=self.clean.shape)
        expected = 10 * np.log10(
            np.mean(np.linalg.norm(self.clean, axis=0) ** 2) / np.mean(np.linalg.norm(noise, axis=0) ** 2)
        )
        self.assertAlmostEqual(snr_db(self.clean, noise), expected, places=10)

        outliers = rng.uniform(size=self.clean.shape)
        index = [3, 9, 17]
        expected = 10 * np.log10(
            np.mean(np.linalg.norm(self.clean, axis=0) ** 2)
            / np.mean(np.linalg.norm(outliers[:, index], axis=0) ** 2)
        )
        self.assertAlmostEqual(sor_db(self.clean, outliers, index), expected, places=10)

    def test_zero_denominator_is_infinite(self):
        self.assertEqual(snr_db(self.clean, np.zeros_like(self.clean)), math.inf)
        self.assertEqual(sor_db(self.clean, np.zeros_like(self.clean), [0]), math.inf)

    def test_empty_outlier_set_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            sor_db(self.clean, self.clean, [])


class ContainerTests(SimpleTestCase):

    def test_data_matrix_rejects_non_finite(self):
        with self.assertRaises(InvalidArgumentError):
            DataMatrix(np.array([[1.0, np.nan]]))

    def test_data_matrix_is_read_only(self):
        X = DataMatrix(np.ones((2, 3)))
        self.assertEqual((X.rows, X.cols), (2, 3))
        with self.assertRaises(ValueError):
            X.values[0, 0] = 5.0

    def test_factor_model_feasibility(self):
        model = FactorModel(np.ones((3, 2)), np.array([[0.25, 1.0], [0.75, 0.0]]))
        self.assertTrue(model.is_feasible())
        model.validate()
        with self.assertRaises(InvalidArgumentError):
            check_simplex_columns(np.array([[0.6], [0.6]]))

    def test_extended_float_field(self):
        field = ExtendedFloatField()
        self.assertEqual(field.to_representation(math.inf), 'inf')
        self.assertEqual(field.to_representation(0.1), 0.1)
        self.assertEqual(field.to_internal_value('inf'), math.inf)
        self.assertEqual(field.to_internal_value('-25.5'), -25.5)
