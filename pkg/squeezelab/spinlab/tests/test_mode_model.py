import numpy as np
from django.test import SimpleTestCase
from scipy import constants
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from mode_model import (
    BOHR_RADIUS,
    ConvergenceError,
    ModeProfile,
    ScatteringSpec,
    TrapSpec,
    amplitude_overlap,
    chemical_potential,
    chi_from_modes,
    chi_lambda_curve,
    overlap_lambda,
    split_sequence_profile,
    stationary_modes,
)

SMALL_GRID = {"points": 128}


class StationaryModesTest(SimpleTestCase):

    def test_identical_couplings_give_full_overlap(self):
        scat = ScatteringSpec(a00=100.0, a01=100.0, a11=100.0)
        modes = stationary_modes(TrapSpec(), scat, 2.0, 2.0, **SMALL_GRID)
        self.assertAlmostEqual(overlap_lambda(modes), 1.0, places=12)
        self.assertAlmostEqual(amplitude_overlap(modes), 1.0, places=9)

    def test_weak_interaction_chemical_potential(self):
        # почти идеальный газ: μ = ħ(ω_z/2 + ω⊥)
        trap = TrapSpec()
        scat = ScatteringSpec(a00=1e-3, a01=1e-3, a11=1e-3)
        modes = stationary_modes(trap, scat, 1.0, 1.0, **SMALL_GRID)
        expected = constants.hbar * 2 * np.pi * (trap.f_long / 2 + trap.f_ax)
        for which in (0, 1):
            with self.subTest(which=which):
                self.assertAlmostEqual(chemical_potential(trap, scat, modes, which) / expected, 1.0, places=5)
        with self.assertRaises(ValueError):
            chemical_potential(trap, scat, modes, 2)

    def test_far_separated_traps(self):
        trap = TrapSpec(separation=12e-6)
        modes = stationary_modes(trap, ScatteringSpec(), 10.0, 10.0, **SMALL_GRID)
        self.assertLess(overlap_lambda(modes), 1e-3)
        centers = [np.sum(modes.grid * density) * modes.step for density in (modes.density0, modes.density1)]
        self.assertAlmostEqual(centers[0], -6e-6, delta=0.1e-6)
        self.assertAlmostEqual(centers[1], 6e-6, delta=0.1e-6)

    def test_thomas_fermi_chemical_potential(self):
        # одна компонента: μ - V(z) = ħω⊥(1 + 1.5x)/sqrt(1 + x), x = 2a·n(z)
        trap, scat = TrapSpec(), ScatteringSpec()
        n_atoms = 10000
        modes = stationary_modes(trap, scat, n_atoms, 0.0, points=1024, time_step=0.01)

        floor = constants.hbar * 2 * np.pi * trap.f_ax
        omega_long = 2 * np.pi * trap.f_long
        z = np.linspace(-60e-6, 60e-6, 20001)
        trap_energy = 0.5 * scat.mass * omega_long ** 2 * z ** 2

        def excess_atoms(mu):
            y = np.clip((mu - trap_energy) / floor, 1.0, None)
            x = (y ** 2 - 3 + y * np.sqrt(y ** 2 + 3)) / 4.5
            return trapezoid(x / (2 * scat.a00 * BOHR_RADIUS), z) - n_atoms

        expected = brentq(excess_atoms, floor, 100 * floor)
        mu = chemical_potential(trap, scat, modes, 0)
        self.assertAlmostEqual((mu - floor) / (expected - floor), 1.0, delta=0.05)

    def test_grid_refinement(self):
        trap, scat = TrapSpec(), ScatteringSpec()
        values = [
            chemical_potential(trap, scat, stationary_modes(trap, scat, 625, 625, points=points), 0)
            for points in (512, 1024)
        ]
        self.assertLess(abs(values[1] / values[0] - 1.0), 1e-4)

    def test_energy_decreases_in_imaginary_time(self):
        modes = stationary_modes(TrapSpec(separation=4e-6), ScatteringSpec(), 300, 300, **SMALL_GRID)
        trace = np.array(modes.energy_trace)
        self.assertGreater(trace.size, 2)
        self.assertEqual(trace[-1], modes.energy)
        self.assertTrue(np.all(np.diff(trace) <= 1e-8 * np.abs(trace[1:])))
        self.assertLess(trace[-1], trace[0])

    def test_convergence_failure(self):
        with self.assertRaises(ConvergenceError) as raised:
            stationary_modes(TrapSpec(), ScatteringSpec(), 100.0, 100.0, points=128, max_iterations=20, tolerance=1e-14)
        self.assertGreater(raised.exception.residual, 1e-14)

    def test_rejects_empty_modes(self):
        with self.assertRaises(ValueError):
            stationary_modes(TrapSpec(), ScatteringSpec(), 0.0, 0.0)


class ChiFromModesTest(SimpleTestCase):

    def test_identical_modes_match_direct_formula(self):
        trap = TrapSpec()
        scat = ScatteringSpec(a00=1.0, a01=0.5, a11=1.0)
        chi = chi_from_modes(trap, scat, 2.0, step=0.5, **SMALL_GRID)

        modes = stationary_modes(trap, scat, 1.0, 1.0, **SMALL_GRID)
        density_integral = np.sum(modes.density0 * modes.density1) * modes.step
        omega_ax = 2 * np.pi * trap.f_ax
        expected = omega_ax * (scat.a00 + scat.a11 - 2 * scat.a01) * BOHR_RADIUS * density_integral
        self.assertAlmostEqual(chi / expected, 1.0, delta=0.01)

        # основное состояние осциллятора: ∫n² = 1/(√(2π) a_z)
        length = np.sqrt(constants.hbar / (scat.mass * 2 * np.pi * trap.f_long))
        self.assertAlmostEqual(density_integral * np.sqrt(2 * np.pi) * length, 1.0, delta=0.01)

    def test_sign_follows_interaction_combination(self):
        trap = TrapSpec()
        chi = chi_from_modes(trap, ScatteringSpec(a00=1.0, a01=1.5, a11=1.0), 2.0, step=0.5, **SMALL_GRID)
        self.assertLess(chi, 0.0)

    def test_rejects_bad_step(self):
        with self.assertRaises(ValueError):
            chi_from_modes(TrapSpec(), ScatteringSpec(), 10.0, step=6.0)
        with self.assertRaises(ValueError):
            chi_from_modes(TrapSpec(), ScatteringSpec(), 1.0)


class ChiLambdaCurveTest(SimpleTestCase):
    separations = [0.0, 2e-6, 4e-6, 8e-6, 12e-6]

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rows = chi_lambda_curve(TrapSpec(), ScatteringSpec(), 1250, cls.separations)

    def test_rows_follow_separations(self):
        self.assertEqual([row.separation for row in self.rows], self.separations)

    def test_overlap_falls_and_chi_rises(self):
        overlaps = [row.overlap for row in self.rows]
        chis = np.array([row.chi for row in self.rows])
        self.assertEqual(overlaps, sorted(overlaps, reverse=True))
        self.assertTrue(np.all(np.diff(chis) > -1e-3 * np.max(np.abs(chis))))

    def test_full_separation(self):
        separated = self.rows[-1]
        self.assertLess(separated.overlap, 1e-3)
        self.assertGreaterEqual(separated.chi, 0.75)
        self.assertLessEqual(separated.chi, 3.5)

    def test_overlapping_modes_barely_twist(self):
        overlapping = self.rows[0]
        self.assertGreater(overlapping.overlap, 0.7)
        self.assertLess(abs(overlapping.chi), 0.1 * self.rows[-1].chi)
        # a00 + a11 = 2a01
        self.assertLess(abs(overlapping.chi), 0.05)

    def test_unsorted_separations(self):
        with self.assertRaises(ValueError):
            chi_lambda_curve(TrapSpec(), ScatteringSpec(), 100, [2e-6, 0.0])
        with self.assertRaises(ValueError):
            chi_lambda_curve(TrapSpec(), ScatteringSpec(), 100, [])


class SplitProfileTest(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.profile = split_sequence_profile(
            TrapSpec(separation=2e-6), ScatteringSpec(), 20, 0.01, samples=21, table_points=3, **SMALL_GRID,
        )

    def test_components_return_to_start(self):
        profile = self.profile
        self.assertEqual(profile.times.size, 21)
        self.assertAlmostEqual(profile.duration, 0.01)
        self.assertAlmostEqual(profile.lambda_t[0], profile.lambda_t[-1], places=12)
        self.assertEqual(int(np.argmin(profile.lambda_t)), 10)
        self.assertAlmostEqual(profile.displacement[10], 4e-6)
        self.assertGreater(profile.contrast_estimate, 0.95)

    def test_twist_integral_scales(self):
        integral = self.profile.twist_integral()
        self.assertGreater(integral, 0.0)
        self.assertAlmostEqual(self.profile.scaled(2.0).twist_integral(), 2 * integral)
        with self.assertRaises(ValueError):
            self.profile.scaled(-1.0)

    def test_without_splitting(self):
        profile = split_sequence_profile(
            TrapSpec(), ScatteringSpec(a00=100.0, a01=100.0, a11=100.0), 20, 0.01, samples=5, **SMALL_GRID,
        )
        np.testing.assert_allclose(profile.lambda_t, 1.0)
        np.testing.assert_allclose(profile.chi_t, profile.chi_t[0])
        self.assertAlmostEqual(profile.contrast_estimate, 1.0, places=9)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(ValueError):
            split_sequence_profile(TrapSpec(), ScatteringSpec(), 20, 0.0)
        with self.assertRaises(ValueError):
            split_sequence_profile(TrapSpec(), ScatteringSpec(), 20, 0.01, amplitude_scale=-1.0)


class OverlapTest(SimpleTestCase):

    def test_displaced_gaussians(self):
        sigma = 1e-6
        grid = np.linspace(-20 * sigma, 20 * sigma, 2048, endpoint=False)
        step = grid[1] - grid[0]

        def gaussian(center):
            density = np.exp(-(grid - center) ** 2 / (2 * sigma ** 2))
            return density / (np.sum(density) * step)

        for distance in (0.5e-6, 1e-6, 3e-6):
            with self.subTest(distance=distance):
                modes = ModeProfile(
                    grid=grid, density0=gaussian(-distance / 2), density1=gaussian(distance / 2), n0=1.0, n1=1.0,
                )
                self.assertAlmostEqual(overlap_lambda(modes), np.exp(-distance ** 2 / (4 * sigma ** 2)), places=9)
