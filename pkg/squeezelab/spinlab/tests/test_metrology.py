import numpy as np
from django.test import SimpleTestCase

from metrology import (
    ConstraintInfeasibleError,
    UndefinedContrastError,
    curve_value,
    depth_curve,
    entanglement_depth,
    from_db,
    min_variance_angle,
    oat_min_variance,
    squeezing_parameter,
    squeezing_report,
    to_db,
)
from spin_core import evolve_oat, expectations, make_coherent_state


def ellipse_covariance(theta, v_min, v_max):
    """Ковариация (Sy, Sz), у которой минимум S_θ = cos θ Sz - sin θ Sy равен v_min."""
    squeezed = np.array([-np.sin(theta), np.cos(theta)])
    other = np.array([np.cos(theta), np.sin(theta)])
    return v_min * np.outer(squeezed, squeezed) + v_max * np.outer(other, other)


class MinVarianceAngleTest(SimpleTestCase):

    def test_recovers_rotated_ellipse(self):
        for theta in (-1.2, -0.3, 0.0, 0.1, 1.0):
            result = min_variance_angle(ellipse_covariance(theta, 2.0, 9.0))
            with self.subTest(theta=theta):
                self.assertAlmostEqual(result.theta_min, theta, places=10)
                self.assertAlmostEqual(result.min_variance, 2.0, places=10)
                self.assertFalse(result.degenerate)

    def test_isotropic_covariance_is_degenerate(self):
        result = min_variance_angle(np.eye(2) * 3.0)
        self.assertTrue(result.degenerate)
        self.assertEqual(result.theta_min, 0.0)
        self.assertAlmostEqual(result.min_variance, 3.0)

    def test_accepts_expectations(self):
        state = make_coherent_state(16, np.pi / 2, 0.0)
        result = min_variance_angle(expectations(state))
        self.assertTrue(result.degenerate)
        self.assertAlmostEqual(result.min_variance, 4.0, places=9)


class SqueezingParameterTest(SimpleTestCase):

    def test_db_helpers(self):
        self.assertAlmostEqual(to_db(0.5), -3.0103, places=4)
        self.assertAlmostEqual(from_db(to_db(0.37)), 0.37, places=12)

    def test_coherent_state(self):
        report = squeezing_report(1250, 1250 / 4, contrast=1.0)
        self.assertAlmostEqual(report.xi_squared, 1.0, places=12)
        self.assertAlmostEqual(report.normalized_variance_db, 0.0, places=12)
        self.assertEqual(report.depth, 1)

    def test_reported_squeezing(self):
        n_atoms = 1250
        variance = from_db(-3.7) * n_atoms / 4
        report = squeezing_report(n_atoms, variance, contrast=0.88, theta_min=np.radians(6))
        self.assertAlmostEqual(report.xi_squared_db, -2.56, delta=0.05)
        self.assertGreaterEqual(report.depth, 3)
        self.assertLessEqual(report.depth, 5)
        rows = dict(report.as_rows())
        self.assertEqual(rows["theta_min_deg"], "6.0000")
        self.assertEqual(rows["depth"], str(report.depth))

    def test_zero_contrast(self):
        with self.assertRaises(UndefinedContrastError):
            squeezing_parameter(100, 10.0, 0.0)
        with self.assertRaises(UndefinedContrastError):
            entanglement_depth(100, 10.0, 0.0)

    def test_analytic_twisting_matches_evolution(self):
        n_atoms, twist = 50, 0.05
        state = evolve_oat(make_coherent_state(n_atoms, np.pi / 2, 0.0), 0.0, twist, 1.0)
        exact = min_variance_angle(expectations(state)).min_variance
        self.assertAlmostEqual(oat_min_variance(n_atoms, twist) / exact, 1.0, places=9)
        self.assertAlmostEqual(oat_min_variance(n_atoms, 0.0), n_atoms / 4, places=12)


class DepthCurveTest(SimpleTestCase):

    def test_spin_half_curve(self):
        self.assertAlmostEqual(curve_value(0.5, 0.6), 0.18, places=4)
        self.assertEqual(curve_value(0.5, 1.0), 0.5)

    def test_curve_samples_the_grid(self):
        curve = depth_curve(1.0, [0.2, 0.5, 0.8])
        self.assertEqual(curve.j, 1.0)
        self.assertEqual([x for x, _ in curve.samples], [0.2, 0.5, 0.8])
        values = [value for _, value in curve.samples]
        self.assertEqual(values, sorted(values))
        self.assertAlmostEqual(values[1], curve_value(1.0, 0.5))

    def test_larger_clusters_allow_lower_variance(self):
        values = [curve_value(j, 0.9) for j in (0.5, 1.0, 2.0, 5.0)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_depth_grows_with_squeezing(self):
        n_atoms = 1250
        depths = [
            entanglement_depth(n_atoms, from_db(value) * n_atoms / 4, 0.95 * n_atoms / 2)
            for value in (-1.0, -4.0, -8.0)
        ]
        self.assertEqual(depths, sorted(depths))
        self.assertGreater(depths[-1], depths[0])

    def test_infeasible_arguments(self):
        with self.assertRaises(ConstraintInfeasibleError):
            curve_value(0.5, 1.5)
        with self.assertRaises(ConstraintInfeasibleError):
            curve_value(0.3, 0.5)
