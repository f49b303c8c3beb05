import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import expm

from spin_core import (
    CollectiveSpinState,
    InvalidStateError,
    PulseSpec,
    apply_rotation,
    evolve_oat,
    evolve_pulse,
    evolve_pulses,
    expectations,
    make_coherent_state,
    pole_state,
    pulsed_ground_state,
    rotate_z,
    sample_sz,
    spin_operators,
    variance_along,
)

RABI = 2 * np.pi * 2100


def dense_operators(n_atoms):
    """Sx, Sy, Sz плотными матрицами в базисе m = -N/2..N/2."""
    spin = n_atoms / 2.0
    m = np.arange(n_atoms + 1) - spin
    ladder = np.sqrt(spin * (spin + 1) - m[:-1] * (m[:-1] + 1))
    s_plus = np.diag(ladder, -1).astype(complex)
    sx = (s_plus + s_plus.T) / 2
    sy = (s_plus - s_plus.T) / 2j
    return sx, sy, np.diag(m).astype(complex)


def random_state(n_atoms, seed):
    rng = np.random.default_rng(seed)
    amplitudes = rng.normal(size=n_atoms + 1) + 1j * rng.normal(size=n_atoms + 1)
    return CollectiveSpinState.normalized(n_atoms, amplitudes)


class SpinCoreTest(SimpleTestCase):

    def assertSameRay(self, expected, actual, tolerance=1e-9):
        overlap = np.vdot(actual, expected)
        phase = overlap / abs(overlap)
        self.assertLess(np.linalg.norm(actual * phase - expected), tolerance)

    def test_pulse_matches_dense_propagator(self):
        for n_atoms in (1, 2, 5, 12):
            sx, sy, sz = dense_operators(n_atoms)
            state = random_state(n_atoms, seed=n_atoms)
            for chi in (0.0, 40.0):
                pulse = PulseSpec(rabi=RABI, phase=0.7, detuning=2 * np.pi * 300, duration=1.3e-4)
                hamiltonian = (
                    pulse.detuning * sz
                    + pulse.rabi * (np.cos(pulse.phase) * sx - np.sin(pulse.phase) * sy)
                    + chi * sz @ sz
                )
                expected = expm(-1j * pulse.duration * hamiltonian) @ state.amplitudes
                with self.subTest(n_atoms=n_atoms, chi=chi):
                    self.assertSameRay(expected, evolve_pulse(state, pulse, chi=chi).amplitudes)

    def test_rotation_matches_dense(self):
        n_atoms = 6
        sx, sy, _ = dense_operators(n_atoms)
        state = random_state(n_atoms, seed=11)
        for azimuth, angle in ((0.0, 0.4), (np.pi / 2, -1.1), (2.3, np.pi)):
            generator = np.cos(azimuth) * sx - np.sin(azimuth) * sy
            expected = expm(-1j * angle * generator) @ state.amplitudes
            with self.subTest(azimuth=azimuth, angle=angle):
                self.assertSameRay(expected, apply_rotation(state, azimuth, angle).amplitudes)

    def test_batched_pulses_match_single_pulses(self):
        n_atoms = 40
        states = [random_state(n_atoms, seed) for seed in range(4)]
        pulses = [
            PulseSpec.for_angle(RABI, np.radians(6.0), phase=np.pi),
            PulseSpec.for_angle(RABI * 1.003, np.pi, phase=np.pi, detuning=2 * np.pi * 40),
            PulseSpec.for_angle(RABI, 0.0, phase=np.pi),
            PulseSpec(rabi=RABI, phase=0.7, detuning=-2 * np.pi * 300, duration=1.3e-4),
        ]
        batched = evolve_pulses(states, pulses)
        for state, pulse, result in zip(states, pulses, batched):
            with self.subTest(pulse=pulse):
                np.testing.assert_allclose(result.amplitudes, evolve_pulse(state, pulse).amplitudes, atol=1e-10)
        self.assertEqual(evolve_pulses([], []), [])
        with self.assertRaises(InvalidStateError):
            evolve_pulses([states[0], random_state(5, 0)], pulses[:2])
        with self.assertRaises(InvalidStateError):
            evolve_pulses(states, pulses[:3])

    def test_expectations_match_dense(self):
        n_atoms = 7
        sx, sy, sz = dense_operators(n_atoms)
        state = random_state(n_atoms, seed=3)
        psi = state.amplitudes

        def mean(operator):
            return np.vdot(psi, operator @ psi).real

        values = expectations(state)
        self.assertAlmostEqual(values.sx, mean(sx), places=10)
        self.assertAlmostEqual(values.sy, mean(sy), places=10)
        self.assertAlmostEqual(values.sz, mean(sz), places=10)
        var_y = mean(sy @ sy) - mean(sy) ** 2
        var_z = mean(sz @ sz) - mean(sz) ** 2
        cov = 0.5 * mean(sy @ sz + sz @ sy) - mean(sy) * mean(sz)
        np.testing.assert_allclose(values.cov_yz, [[var_y, cov], [cov, var_z]], atol=1e-9)

    def test_rotate_z_matches_dense(self):
        _, _, sz = dense_operators(6)
        state = random_state(6, seed=11)
        expected = expm(-1j * 0.37 * sz) @ state.amplitudes
        np.testing.assert_allclose(rotate_z(state, 0.37).amplitudes, expected, atol=1e-12)

    def test_coherent_state_direction(self):
        n_atoms = 20
        polar, azimuth = 1.1, -0.4
        values = expectations(make_coherent_state(n_atoms, polar, azimuth))
        half = n_atoms / 2
        self.assertAlmostEqual(values.sx, half * np.sin(polar) * np.cos(azimuth), places=9)
        self.assertAlmostEqual(values.sy, half * np.sin(polar) * np.sin(azimuth), places=9)
        self.assertAlmostEqual(values.sz, half * np.cos(polar), places=9)

    def test_coherent_state_variance_is_isotropic(self):
        state = make_coherent_state(40, np.pi / 2, 0.0)
        for theta in np.linspace(-np.pi / 2, np.pi / 2, 7):
            self.assertAlmostEqual(variance_along(state, theta), 10.0, places=9)

    def test_one_axis_twisting_mean_spin(self):
        twist = 0.1
        for n_atoms in (2, 4, 8, 100):
            state = make_coherent_state(n_atoms, np.pi / 2, 0.0)
            twisted = evolve_oat(state, detuning=0.0, chi=twist / 1e-2, time=1e-2)
            expected = n_atoms / 2 * np.cos(twist) ** (n_atoms - 1)
            with self.subTest(n_atoms=n_atoms):
                self.assertLess(abs(expectations(twisted).sx - expected) / expected, 1e-8)

    def test_twisting_keeps_sz_distribution(self):
        state = make_coherent_state(30, 1.2, 0.3)
        twisted = evolve_oat(state, detuning=50.0, chi=3.0, time=0.02)
        np.testing.assert_allclose(twisted.probabilities, state.probabilities, atol=1e-14)

    def test_precession_advances_phase(self):
        state = make_coherent_state(10, np.pi / 2, 0.0)
        detuning, time = 2 * np.pi * 40, 1e-3
        values = expectations(evolve_oat(state, detuning=detuning, chi=0.0, time=time))
        self.assertAlmostEqual(np.arctan2(values.sy, values.sx), detuning * time, places=10)

    def test_prepare_pulse_points_along_x(self):
        n_atoms = 50
        state = pulsed_ground_state(n_atoms, PulseSpec.for_angle(RABI, np.pi / 2, phase=np.pi / 2))
        values = expectations(state)
        self.assertAlmostEqual(values.sx, n_atoms / 2, places=8)
        self.assertAlmostEqual(values.sz, 0.0, places=8)

    def test_pulsed_ground_state_matches_pulse_evolution(self):
        pulse = PulseSpec(rabi=RABI, phase=0.4, detuning=2 * np.pi * 150, duration=1.1e-4)
        for n_atoms in (1, 9, 30):
            expected = evolve_pulse(pole_state(n_atoms, up=False), pulse).amplitudes
            with self.subTest(n_atoms=n_atoms):
                self.assertSameRay(expected, pulsed_ground_state(n_atoms, pulse).amplitudes)

    def test_clockwise_tomography_pulse(self):
        # φ = π: после импульса на θ измеряется cos θ Sz - sin θ Sy
        n_atoms, theta = 40, 0.3
        state = make_coherent_state(n_atoms, np.pi / 2, np.pi / 2)
        measured = evolve_pulse(state, PulseSpec.for_angle(RABI, theta, phase=np.pi))
        self.assertAlmostEqual(expectations(measured).sz, -np.sin(theta) * n_atoms / 2, places=8)

    def test_sample_sz(self):
        self.assertEqual(sample_sz(pole_state(12, up=False), 1), -6.0)
        state = make_coherent_state(25, np.pi / 2, 0.0)
        self.assertEqual(sample_sz(state, [4, 1]), sample_sz(state, [4, 1]))
        self.assertEqual(sample_sz(state, 7) % 1, 0.5)

    def test_operator_cache(self):
        ops = spin_operators(5)
        self.assertIs(ops, spin_operators(5))
        values, _ = ops.sx_eigensystem
        np.testing.assert_allclose(values, np.arange(6) - 2.5, atol=1e-12)
        with self.assertRaises(ValueError):
            ops.ladder[0] = 1.0

    def test_invalid_states(self):
        with self.assertRaises(InvalidStateError):
            CollectiveSpinState(3, np.ones(4))
        with self.assertRaises(InvalidStateError):
            CollectiveSpinState(3, np.array([1.0, 0.0]))
        with self.assertRaises(InvalidStateError):
            pole_state(0)
        with self.assertRaises(InvalidStateError):
            evolve_oat(pole_state(2), 0.0, 1.0, -1.0)
        with self.assertRaises(InvalidStateError):
            PulseSpec(rabi=RABI, duration=-1.0)
