import os
import tempfile

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from mode_model import RB87_MASS

from ..config import ConfigError, RunConfig, load_config, parse_config

CONFIGS_DIR = settings.BASE_DIR / 'configs'


class DefaultsTest(SimpleTestCase):

    def test_defaults(self):
        config = load_config(None)
        self.assertEqual(config, RunConfig())
        self.assertEqual(config.run.seed, 20240601)
        self.assertEqual(config.sequence.twist_mode, 'none')
        self.assertEqual(len(config.thetas), 13)
        self.assertAlmostEqual(config.thetas[0], -np.pi / 2)
        self.assertAlmostEqual(config.rabi, 2 * np.pi * 2100)
        self.assertAlmostEqual(config.scattering_spec().mass / RB87_MASS, 1.0, places=12)
        self.assertEqual(config.imaging_spec().sz_variance, 0.0)

    def test_every_shipped_config_loads(self):
        for name in sorted(os.listdir(CONFIGS_DIR)):
            with self.subTest(name=name):
                load_config(str(CONFIGS_DIR / name))

    def test_paper_config(self):
        config = load_config(str(CONFIGS_DIR / 'paper.ini'))
        self.assertEqual(config.physics.n_atoms, 1250)
        self.assertEqual(config.sequence.twist_mode, 'constant')
        self.assertEqual(config.sequence.target_floor_db, -12.8)
        self.assertEqual(len(config.sequence.theta_deg), 19)
        self.assertAlmostEqual(config.imaging_spec().combined, 7.0)
        self.assertAlmostEqual(config.noise_spec().phase_rms, np.radians(8.0))
        self.assertAlmostEqual(config.noise_spec().detuning_rms, 2 * np.pi * 40)
        self.assertAlmostEqual(config.loss_spec().rate2_01, 2.6e-3)
        self.assertAlmostEqual(config.trap_spec().separation, 0.52e-6)
        self.assertEqual(config.trap_spec(2.0).separation, 2e-6)
        self.assertEqual(config.modes.separations_um[-1], 4.0)


class ParseTest(SimpleTestCase):

    def test_lists_accept_line_continuation(self):
        config = parse_config('[sequence]\ntheta_deg = -90, 0,\n  45  # градусы\n')
        self.assertEqual(config.sequence.theta_deg, [-90.0, 0.0, 45.0])

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config('[run]\nsed = 1\n')
        self.assertIn('run.sed', str(raised.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config('[bogus]\nvalue = 1\n', source='test.ini')
        self.assertIn('[bogus]', str(raised.exception))
        self.assertIn('test.ini', str(raised.exception))

    def test_syntax_error_names_the_line(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config('[run]\nseed = 1\nthis line is broken\n')
        self.assertRegex(str(raised.exception), r'line\D*3')

    def test_invalid_values(self):
        cases = {
            '[run]\nshots = 1\n': 'run.shots',
            '[physics]\ntomography_phase_rule = sideways\n': 'physics.tomography_phase_rule',
            '[sequence]\ntheta_deg = 0, 10, 0\n': 'sequence.theta_deg',
            '[modes]\nseparations_um = 1, 0.5\n': 'modes.separations_um',
            '[analysis]\ncontrast = 0\n': 'analysis.contrast',
        }
        for text, location in cases.items():
            with self.subTest(location=location):
                with self.assertRaises(ConfigError) as raised:
                    parse_config(text)
                self.assertIn(location, str(raised.exception))

    def test_conflicting_twist_sources(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config('[sequence]\ntwist_mode = constant\nchi_per_s = 1.5\ntarget_floor_db = -5\n')
        self.assertIn('sequence', str(raised.exception))
        with self.assertRaises(ConfigError):
            parse_config('[sequence]\ntwist_mode = constant\n')
        with self.assertRaises(ConfigError):
            parse_config('[sequence]\ntwist_mode = profile\nchi_per_s = 1.5\n')

    def test_conflicting_imaging_sources(self):
        with self.assertRaises(ConfigError):
            parse_config('[imaging]\ncombined_atoms = 7\nsigma_n0_atoms = 5\n')
        config = parse_config('[imaging]\nsigma_n0_atoms = 3\nsigma_n1_atoms = 4\n')
        self.assertAlmostEqual(config.imaging_spec().sz_variance, 25.0 / 4)

    def test_missing_file(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(ConfigError):
                load_config(os.path.join(directory, 'absent.ini'))


class OverridesTest(SimpleTestCase):

    def test_flags_replace_run_section(self):
        config = RunConfig().with_overrides(seed=5, shots=10, output_dir='elsewhere')
        self.assertEqual((config.run.seed, config.run.shots, config.run.output_dir), (5, 10, 'elsewhere'))
        self.assertEqual(config.physics, RunConfig().physics)

    def test_without_flags(self):
        config = RunConfig()
        self.assertIs(config.with_overrides(), config)

    def test_invalid_override(self):
        with self.assertRaises(ConfigError) as raised:
            RunConfig().with_overrides(shots=1)
        self.assertIn('run.shots', str(raised.exception))
