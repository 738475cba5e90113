import math
import unittest

import numpy as np

import radial_engine
from radial_engine import OdeConfig, RadialEngineError

SQRT96 = math.sqrt(96.0)
BETA_STAR = 8.0 / SQRT96
TIGHT = OdeConfig(rtol=1e-12, atol=1e-14)


def v0(r):
    return np.log(SQRT96 / (SQRT96 + r ** 2))


def out_frac(R):
    t = SQRT96 + R ** 2
    return 288.0 / t ** 2 - 192.0 * SQRT96 / t ** 3


class TestRadialLaplacian(unittest.TestCase):
    def test_quadratic_on_nonuniform_grid(self):
        r = np.concatenate([[0.0], np.geomspace(1e-3, 3.0, 40)])
        lap = radial_engine.radial_laplacian(r, r ** 2)
        np.testing.assert_allclose(lap, -8.0, rtol=1e-8)

    def test_quadratic_without_origin(self):
        r = np.linspace(0.5, 2.0, 9)
        np.testing.assert_allclose(radial_engine.radial_laplacian(r, r ** 2), -8.0, rtol=1e-10)

    def test_constant(self):
        r = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(radial_engine.radial_laplacian(r, np.full_like(r, 3.0)), 0.0, atol=1e-12)

    def test_bubble_at_origin(self):
        r = np.linspace(0.0, 0.05, 51)
        lap = radial_engine.radial_laplacian(r, v0(r))
        self.assertAlmostEqual(lap[0], BETA_STAR, places=6)

    def test_too_coarse(self):
        with self.assertRaises(RadialEngineError):
            radial_engine.radial_laplacian([0.0, 1.0], [0.0, 1.0])

    def test_laplacian_of_callable(self):
        r = np.array([0.0, 0.1, 1.0, 4.0])
        np.testing.assert_allclose(radial_engine.laplacian_of(lambda s: s ** 2, r), -8.0, rtol=1e-9)


class TestTaylorSeed(unittest.TestCase):
    def test_zero_data(self):
        np.testing.assert_array_equal(radial_engine.taylor_seed(0.0, 0.0, 0.0, 1e-3), np.zeros(4))

    def test_matches_bubble(self):
        u, du, w, dw = radial_engine.taylor_seed(0.0, BETA_STAR, 1.0, 1e-3)
        np.testing.assert_allclose(u, float(v0(1e-3)), rtol=1e-10)
        self.assertAlmostEqual(du, -2e-3 / (SQRT96 + 1e-6), places=14)
        self.assertAlmostEqual(w, BETA_STAR - 1e-6 / 8.0, places=15)

    def test_forcing_only(self):
        r = 1e-2
        u, _, w, _ = radial_engine.taylor_seed(0.0, 0.0, 1.0, r)
        self.assertAlmostEqual(u, r ** 4 / 192.0, places=18)
        self.assertAlmostEqual(w, -r ** 2 / 8.0, places=16)

    def test_rejects_nonpositive_radius(self):
        with self.assertRaises(RadialEngineError):
            radial_engine.taylor_seed(0.0, 1.0, 1.0, 0.0)


class TestIntegrateIvp(unittest.TestCase):
    def test_reproduces_bubble(self):
        profile, event = radial_engine.integrate_ivp(0.0, BETA_STAR, None, TIGHT)
        self.assertEqual(event.kind, radial_engine.REACHED_RMAX)
        self.assertEqual(profile.r_max, 50.0)
        self.assertLess(np.max(np.abs(profile.u - v0(profile.r))), 1e-6)

    def test_zero_data_zero_forcing(self):
        profile, event = radial_engine.integrate_ivp(0.0, 0.0, lambda r: 0.0)
        self.assertEqual(event.kind, radial_engine.REACHED_RMAX)
        self.assertEqual(np.max(np.abs(profile.u)), 0.0)

    def test_negative_laplacian_blows_up(self):
        profile, event = radial_engine.integrate_ivp(0.0, -1.0)
        self.assertEqual(event.kind, radial_engine.GROWTH_ABORT)
        self.assertLess(event.r_stop, 5.0)
        self.assertGreater(profile.u[-1], 20.0)
        self.assertLess(event.state[2], 0.0)
        self.assertGreater(event.state[1], 0.0)

    def test_sign_abort_stops_at_zero_of_laplacian(self):
        profile, event = radial_engine.integrate_ivp(0.0, 0.5, None, OdeConfig(sign_abort=True))
        self.assertEqual(event.kind, radial_engine.GROWTH_ABORT)
        self.assertAlmostEqual(profile.w[-1], 0.0, places=8)

    def test_laplacian_strictly_decreasing(self):
        profile, _ = radial_engine.integrate_ivp(0.0, 1.5)
        self.assertTrue(np.all(np.diff(profile.w) < 0.0))

    def test_laplacian_track_round_trip(self):
        profile, _ = radial_engine.integrate_ivp(0.0, 1.5)
        lap = radial_engine.radial_laplacian(profile.r, profile.u)
        inner = (profile.r > 0.5) & (profile.r < 10.0)
        err = np.abs(lap[inner] - profile.w[inner])
        self.assertLess(np.max(err / np.maximum(1.0, np.abs(profile.w[inner]))), 1e-2)

    def test_scaling_invariance(self):
        mu = 2.0
        base, _ = radial_engine.integrate_ivp(0.0, 1.5, None, OdeConfig(rtol=1e-12, atol=1e-14, r_max=20.0))
        scaled, _ = radial_engine.integrate_ivp(math.log(mu), mu ** 2 * 1.5, None,
                                                OdeConfig(rtol=1e-12, atol=1e-14, r_max=10.0))
        r = np.linspace(0.1, 10.0, 25)
        expected = base.at(mu * r) + math.log(mu)
        err = np.abs(scaled.at(r) - expected) / (1.0 + np.abs(expected))
        self.assertLess(np.max(err), 1e-8)
        self.assertAlmostEqual(radial_engine.energy(scaled, 5.0) / radial_engine.energy(base, 10.0), 1.0, places=8)


class TestEnergy(unittest.TestCase):
    def test_unit_ball_volume(self):
        r = np.linspace(0.0, 1.0, 11)
        zero = radial_engine.sample_profile(r, lambda s: 0.0, lambda s: 0.0, lambda s: 0.0, lambda s: 0.0)
        self.assertAlmostEqual(radial_engine.energy(zero, 1.0), math.pi ** 2 / 2.0, places=12)
        self.assertAlmostEqual(radial_engine.energy(zero, 0.55), math.pi ** 2 * 0.55 ** 4 / 2.0, places=12)

    def test_bubble_mass_fraction(self):
        profile, _ = radial_engine.integrate_ivp(0.0, BETA_STAR, None, OdeConfig(rtol=1e-12, atol=1e-14, r_max=100.0))
        expected = 16.0 * math.pi ** 2 * (1.0 - out_frac(10.0))
        self.assertAlmostEqual(radial_engine.energy(profile, 10.0) / expected, 1.0, places=8)
        total = 16.0 * math.pi ** 2 * (1.0 - out_frac(100.0))
        self.assertAlmostEqual(radial_engine.energy(profile, 100.0) / total, 1.0, places=8)

    def test_quadrature_path_matches_mass_track(self):
        profile, _ = radial_engine.integrate_ivp(0.0, BETA_STAR, None, TIGHT)
        tracked = radial_engine.energy(profile, 20.0)
        quadrature = radial_engine.energy(profile, 20.0, V=lambda s: 1.0)
        self.assertAlmostEqual(quadrature / tracked, 1.0, places=6)

    def test_beyond_grid(self):
        r = np.linspace(0.0, 1.0, 5)
        zero = radial_engine.sample_profile(r, lambda s: 0.0, lambda s: 0.0, lambda s: 0.0, lambda s: 0.0)
        with self.assertRaises(RadialEngineError):
            radial_engine.energy(zero, 1.5)


class TestRadialPoisson(unittest.TestCase):
    def test_constant_source(self):
        psi = radial_engine.solve_radial_poisson(lambda s: 1.0, radial_engine.ZERO_AT_ORIGIN, r_max=2.0)
        np.testing.assert_allclose(psi.u, -psi.r ** 2 / 8.0, atol=1e-12)

    def test_constant_source_zero_at_delta(self):
        psi = radial_engine.solve_radial_poisson(lambda s: 1.0, radial_engine.ZERO_AT_DELTA, r_max=0.5)
        np.testing.assert_allclose(psi.u, (0.25 - psi.r ** 2) / 8.0, atol=1e-12)

    def test_gaussian_source_near_origin(self):
        psi = radial_engine.solve_radial_poisson(lambda s: np.exp(-s ** 2 / 2.0), r_max=4.0)
        near = psi.r <= 0.1
        r = psi.r[near]
        np.testing.assert_allclose(psi.u[near], -r ** 2 / 8.0 + r ** 4 / 48.0, atol=1e-8)

    def test_laplacian_recovers_source(self):
        psi = radial_engine.solve_radial_poisson(lambda s: np.exp(-s ** 2 / 2.0), r_max=4.0)
        lap = radial_engine.radial_laplacian(psi.r, psi.u)
        np.testing.assert_allclose(lap[1:-1], np.exp(-psi.r[1:-1] ** 2 / 2.0), atol=1e-3)

    def test_rejects_strong_singularity(self):
        with self.assertRaises(RadialEngineError):
            radial_engine.solve_radial_poisson(lambda s: s ** -2.0)

    def test_accepts_mild_singularity(self):
        psi = radial_engine.solve_radial_poisson(lambda s: 1.0 / s, r_max=1.0)
        # ψ′ = −r⁻³∫s² ds = −1/3 for f = 1/r
        np.testing.assert_allclose(psi.du[1:], -1.0 / 3.0, rtol=1e-6)


if __name__ == "__main__":
    unittest.main()
