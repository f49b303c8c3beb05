import numpy as np
from django.test import SimpleTestCase

from metrology import min_variance_angle
from spinlab import pipeline
from spinlab.config import RunConfig
from tomography import ShotRecord
from wigner import (
    INVERSE_SQRT_E,
    ContourClippedError,
    InsufficientDataError,
    Marginal,
    ProjectionSet,
    WignerGrid,
    contour_at,
    format_grid_gnuplot,
    forward_radon,
    inverse_radon,
    marginals_from_records,
    smooth_histogram,
)


def gaussian_grid(sigma_y, sigma_z, half=20.0, points=161):
    axis = np.linspace(-half, half, points)
    sz, sy = np.meshgrid(axis, axis, indexing="ij")
    values = np.exp(-sy ** 2 / (2 * sigma_y ** 2) - sz ** 2 / (2 * sigma_z ** 2)) / (2 * np.pi * sigma_y * sigma_z)
    return WignerGrid(sy_axis=axis, sz_axis=axis.copy(), values=values)


def squeezed_records(n_atoms, v_min, v_max, theta_min, angles_deg, shots, seed):
    """Гауссовы S_θ с дисперсией v_min cos²(θ - θ_min) + v_max sin²(θ - θ_min)."""
    rng = np.random.default_rng(seed)
    records = []
    for theta in np.radians(angles_deg):
        variance = v_min * np.cos(theta - theta_min) ** 2 + v_max * np.sin(theta - theta_min) ** 2
        for value in rng.normal(0.0, np.sqrt(variance), size=shots):
            records.append(ShotRecord(
                shot_index=len(records), theta=float(theta), n0=n_atoms / 2 - value, n1=n_atoms / 2 + value,
            ))
    return records


class ContourTest(SimpleTestCase):

    def test_gaussian_contour_area(self):
        contour = contour_at(gaussian_grid(4.0, 2.0))
        self.assertAlmostEqual(contour.enclosed_area / (np.pi * 4.0 * 2.0), 1.0, delta=0.02)
        self.assertAlmostEqual(contour.level, INVERSE_SQRT_E / (2 * np.pi * 8.0))
        np.testing.assert_allclose(contour.polyline[0], contour.polyline[-1])

    def test_clipped_contour(self):
        with self.assertRaises(ContourClippedError):
            contour_at(gaussian_grid(4.0, 2.0, half=3.0, points=25))

    def test_fraction_range(self):
        with self.assertRaises(ValueError):
            contour_at(gaussian_grid(4.0, 2.0), 1.5)


class RadonTest(SimpleTestCase):

    def test_round_trip_of_gaussian(self):
        grid = gaussian_grid(4.0, 2.0)
        angles = np.radians(np.linspace(-90.0, 90.0, 37))
        projections = forward_radon(grid, angles)
        self.assertEqual(len(projections), angles.size)
        # маргинал по θ = 0 это распределение Sz
        self.assertAlmostEqual(projections.marginals[18].variance, 4.0, delta=0.05)

        restored = inverse_radon(projections, grid.sy_axis, grid.sz_axis)
        peak = np.max(grid.values)
        self.assertLess(np.sqrt(np.mean((restored.values - grid.values) ** 2)), 0.05 * peak)
        self.assertAlmostEqual(np.max(restored.values) / peak, 1.0, delta=0.05)

        contour = contour_at(restored)
        widths = np.ptp(contour.polyline, axis=0)
        self.assertAlmostEqual(widths[0] / 8.0, 1.0, delta=0.05)
        self.assertAlmostEqual(widths[1] / 4.0, 1.0, delta=0.05)
        self.assertAlmostEqual(contour.enclosed_area / (np.pi * 8.0), 1.0, delta=0.05)

    def test_inverse_is_linear(self):
        angles = np.radians(np.arange(-90.0, 90.0, 10.0))
        s_axis = np.linspace(-30.0, 30.0, 241)
        first = forward_radon(gaussian_grid(4.0, 2.0), angles, s_axis)
        second = forward_radon(gaussian_grid(1.5, 3.0), angles, s_axis)
        combined = ProjectionSet(marginals=[
            Marginal(theta=a.theta, s_axis=s_axis, density=2.0 * a.density + 3.0 * b.density)
            for a, b in zip(first.marginals, second.marginals)
        ])
        axis = np.linspace(-10.0, 10.0, 81)
        expected = 2.0 * inverse_radon(first, axis, axis).values + 3.0 * inverse_radon(second, axis, axis).values
        restored = inverse_radon(combined, axis, axis).values
        np.testing.assert_allclose(restored, expected, atol=1e-10 * np.max(np.abs(expected)))

    def test_error_falls_with_more_angles(self):
        grid = gaussian_grid(4.0, 2.0)
        errors = []
        for count in (9, 18, 36):
            angles = np.radians(np.linspace(-90.0, 90.0, count, endpoint=False))
            restored = inverse_radon(forward_radon(grid, angles), grid.sy_axis, grid.sz_axis)
            errors.append(np.sqrt(np.mean((restored.values - grid.values) ** 2)))
        self.assertTrue(errors[0] > errors[1] > errors[2], errors)

    def test_few_angles_warn(self):
        projections = forward_radon(gaussian_grid(4.0, 2.0), np.radians([-60.0, 0.0, 60.0]))
        with self.assertLogs("wigner.reconstruction", level="WARNING"):
            inverse_radon(projections, np.linspace(-5, 5, 11), np.linspace(-5, 5, 11))

    def test_rejects_bad_input(self):
        projections = forward_radon(gaussian_grid(4.0, 2.0), [0.0])
        with self.assertRaises(ValueError):
            inverse_radon(projections, np.zeros(3), np.zeros(3), filter_name="shepp")
        with self.assertRaises(InsufficientDataError):
            inverse_radon(ProjectionSet(marginals=[]), np.zeros(3), np.zeros(3))
        with self.assertRaises(ValueError):
            ProjectionSet(marginals=list(reversed(forward_radon(gaussian_grid(4.0, 2.0), [0.0, 0.5]).marginals)))

    def test_gnuplot_layout(self):
        lines = format_grid_gnuplot(gaussian_grid(4.0, 2.0, points=5)).splitlines()
        self.assertEqual(len(lines), 6)
        self.assertEqual(lines[0].split()[0], "5")
        self.assertEqual(len(lines[1].split()), 6)


class MarginalTest(SimpleTestCase):

    def test_smooth_histogram_keeps_moments(self):
        samples = np.random.default_rng(1).normal(1.0, 3.0, size=5000)
        marginal = smooth_histogram(samples, np.linspace(-15, 15, 301), theta=0.2)
        self.assertEqual(marginal.theta, 0.2)
        self.assertAlmostEqual(marginal.mean, 1.0, delta=0.2)
        self.assertAlmostEqual(marginal.variance / 9.0, 1.0, delta=0.1)
        self.assertTrue(np.all(marginal.density >= 0))

    def test_needs_enough_samples(self):
        with self.assertRaises(InsufficientDataError):
            smooth_histogram(np.zeros(29), np.linspace(-1, 1, 21))

    def test_constant_samples(self):
        marginal = smooth_histogram(np.full(40, 2.0), np.linspace(-5, 5, 101))
        self.assertAlmostEqual(marginal.mean, 2.0, places=9)

    def test_opposite_angles_are_merged(self):
        shots = 200
        forward = [ShotRecord(shot_index=i, theta=0.0, n0=615.0, n1=635.0 + i % 5) for i in range(shots)]
        backward = [
            ShotRecord(shot_index=shots + i, theta=np.pi, n0=635.0 + i % 5, n1=615.0) for i in range(shots)
        ]
        projections = marginals_from_records(forward + backward, s_axis=np.linspace(-30, 30, 241))
        self.assertEqual(len(projections), 1)
        self.assertEqual(projections.angles[0], 0.0)
        self.assertAlmostEqual(projections.marginals[0].mean, 11.0, delta=0.3)

    def test_no_records(self):
        with self.assertRaises(InsufficientDataError):
            marginals_from_records([])


class SqueezedReconstructionTest(SimpleTestCase):

    def test_recovers_squeezing_angle(self):
        n_atoms = 1250
        theta_min = np.radians(6.0)
        records = squeezed_records(
            n_atoms, 0.43 * n_atoms / 4, 4.0 * n_atoms / 4, theta_min,
            angles_deg=np.arange(-90.0, 90.0, 10.0), shots=2000, seed=21,
        )
        result = pipeline.reconstruct(RunConfig(), records)
        self.assertEqual(result.n_angles, 18)
        self.assertAlmostEqual(result.mean_atoms, n_atoms)
        self.assertAlmostEqual(result.reference_area, np.pi * n_atoms / 4)

        points = result.contour.polyline
        angle = min_variance_angle(np.cov(points[:, 0], points[:, 1])).theta_min
        self.assertLess(abs(np.degrees(angle - theta_min)), 3.0)

        ratio = result.contour.enclosed_area / result.reference_area
        self.assertGreater(ratio, 1.1)
        self.assertLess(ratio, 1.6)
