import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy.spatial import ConvexHull

from apps.core.exceptions import (
    DegenerateInputError, InvalidArgumentError, UnsupportedDimensionError,
)

from .geometry import (
    CoeffCloud, contains_centroid, extreme_points, facet_distance, hyperplane_basis,
    interior_facets, scattering_radius,
)
from .serializers import ScatterReportSerializer

MEDIAL = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])


def shrunken_simplex(s, N=3):
    return (1 - s) / N * np.ones((N, N)) + s * np.eye(N)


def sampled_radius(S, n_radii=100, n_angles=360):
    """
    Largest rho such that every grid point of the disk of radius rho about the
    centroid that lies in the simplex is inside conv(S) (N = 3 only).
    """
    centroid = np.full(3, 1 / 3)
    U = hyperplane_basis(3)
    hull = ConvexHull((S - centroid[:, None]).T @ U)
    angles = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def inside(rho):
        radii = np.linspace(0.0, rho, n_radii)[1:]
        Y = (radii[:, None, None] * directions[None]).reshape(-1, 2)
        X = centroid + Y @ U.T
        Y = Y[np.all(X >= 0, axis=1)]
        return np.all(Y @ hull.equations[:, :2].T + hull.equations[:, 2] <= 1e-12)

    low, high = 0.0, 1.0
    for _ in range(40):
        middle = 0.5 * (low + high)
        if inside(middle):
            low = middle
        else:
            high = middle
    return low


class ExtremePointTests(SimpleTestCase):

    def test_identity_columns_are_all_extreme(self):
        self.assertEqual(extreme_points(CoeffCloud(np.eye(3))), [0, 1, 2])

    def test_midpoint_is_not_extreme(self):
        S = np.column_stack([[1, 0, 0], [0, 1, 0], [0.5, 0.5, 0]])
        self.assertEqual(extreme_points(CoeffCloud(S)), [0, 1])

    def test_duplicates_reported_once(self):
        S = np.column_stack([np.eye(3), np.eye(3)[:, [1]]])
        self.assertEqual(extreme_points(CoeffCloud(S)), [0, 1, 2])

    def test_matches_hull_vertices(self):
        rng = np.random.default_rng(0)
        U = hyperplane_basis(3)
        for _ in range(10):
            S = rng.dirichlet(np.ones(3), size=30).T
            expected = sorted(ConvexHull((S - 1 / 3).T @ U).vertices.tolist())
            self.assertEqual(extreme_points(CoeffCloud(S)), expected)


class FacetTests(SimpleTestCase):

    def test_full_simplex_has_no_interior_facets(self):
        self.assertEqual(interior_facets(CoeffCloud(np.eye(3))), [])

    def test_medial_triangle(self):
        facets = interior_facets(CoeffCloud(MEDIAL))
        self.assertEqual(len(facets), 3)
        centroid = np.full(3, 1 / 3)
        for facet in facets:
            self.assertAlmostEqual(float(facet.normal @ np.ones(3)), 0.0, places=12)
            self.assertAlmostEqual(np.linalg.norm(facet.normal), 1.0, places=12)
            self.assertAlmostEqual(facet_distance(facet, centroid), 1 / (2 * math.sqrt(6)), places=12)

    def test_shrunken_simplex(self):
        self.assertEqual(len(interior_facets(CoeffCloud(shrunken_simplex(0.7)))), 3)

    def test_dimension_cap(self):
        with self.assertRaises(UnsupportedDimensionError):
            interior_facets(CoeffCloud(np.eye(6)))

    def test_degenerate_hull(self):
        S = np.column_stack([[1, 0, 0], [0, 1, 0], [0.5, 0.5, 0]])
        with self.assertRaises(DegenerateInputError):
            interior_facets(CoeffCloud(S))


class ScatteringRadiusTests(SimpleTestCase):

    def test_identity_is_infinitely_scattered(self):
        report = scattering_radius(CoeffCloud(np.eye(3)))
        self.assertEqual(report.gamma, math.inf)
        self.assertTrue(report.sufficiently_scattered)
        self.assertEqual(report.interior_facet_count, 0)

    def test_medial_triangle(self):
        report = scattering_radius(CoeffCloud(MEDIAL))
        self.assertAlmostEqual(report.gamma, math.sqrt(3 / 8), delta=1e-6)
        self.assertAlmostEqual(report.gamma, 0.612372, places=6)
        self.assertAlmostEqual(report.threshold, 1 / math.sqrt(2), places=12)
        self.assertFalse(report.sufficiently_scattered)
        self.assertAlmostEqual(sampled_radius(MEDIAL), 1 / (2 * math.sqrt(6)), delta=1e-2)

    def test_shrunken_simplex_closed_form(self):
        report = scattering_radius(CoeffCloud(shrunken_simplex(0.7)))
        self.assertAlmostEqual(report.gamma, 0.64417, places=5)
        self.assertFalse(report.sufficiently_scattered)
        for s in np.linspace(0.05, 0.95, 19):
            report = scattering_radius(CoeffCloud(shrunken_simplex(s)))
            self.assertAlmostEqual(report.gamma, math.sqrt(s * s / 6 + 1 / 3), delta=1e-9)

    def test_extreme_points_computed_once(self):
        with mock.patch('apps.identifiability.geometry.extreme_points', wraps=extreme_points) as spy:
            report = scattering_radius(CoeffCloud(MEDIAL))
        self.assertEqual(spy.call_count, 1)
        self.assertEqual(report.extreme_point_count, 3)

    def test_matches_sampling_oracle(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 50:
            S = rng.dirichlet(np.full(3, 3.0), size=int(rng.integers(6, 16))).T
            cloud = CoeffCloud(S)
            if not contains_centroid(cloud):
                continue
            report = scattering_radius(cloud)
            expected = math.sqrt(sampled_radius(S) ** 2 + 1 / 3)
            self.assertAlmostEqual(report.gamma, expected, delta=1e-2)
            checked += 1

    def test_coordinate_permutation_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            S = rng.dirichlet(np.full(4, 2.0), size=12).T
            gamma = scattering_radius(CoeffCloud(S)).gamma
            permuted = scattering_radius(CoeffCloud(S[rng.permutation(4)])).gamma
            if math.isfinite(gamma):
                self.assertAlmostEqual(permuted, gamma, delta=1e-9)
            else:
                self.assertEqual(permuted, gamma)

    def test_adding_columns_never_decreases_gamma(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            S = rng.dirichlet(np.full(3, 3.0), size=8).T
            extra = rng.dirichlet(np.full(3, 3.0), size=4).T
            before = scattering_radius(CoeffCloud(S)).gamma
            after = scattering_radius(CoeffCloud(np.hstack([S, extra]))).gamma
            self.assertGreaterEqual(after, before - 1e-12)

    def test_centroid_outside_hull(self):
        S = np.column_stack([[1, 0, 0], [0.8, 0.2, 0], [0.8, 0, 0.2]])
        report = scattering_radius(CoeffCloud(S))
        self.assertEqual(report.gamma, 0.0)
        self.assertFalse(report.sufficiently_scattered)
        self.assertLess(report.centroid_distance, 0.0)
        self.assertFalse(contains_centroid(CoeffCloud(S)))

    def test_two_dimensional_cloud(self):
        S = np.array([[0.2, 0.9, 0.5], [0.8, 0.1, 0.5]])
        report = scattering_radius(CoeffCloud(S))
        self.assertEqual(report.interior_facet_count, 2)
        self.assertAlmostEqual(report.centroid_distance, 0.3 * math.sqrt(2), places=12)

    def test_infeasible_cloud_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            CoeffCloud(np.array([[0.6], [0.6]]))

    def test_report_serialization(self):
        data = ScatterReportSerializer(scattering_radius(CoeffCloud(np.eye(3)))).data
        self.assertEqual(data['gamma'], 'inf')
        self.assertTrue(data['sufficiently_scattered'])
