import unittest

import numpy as np
from numpy.testing import assert_allclose

from ds2sim.core.ds2_model import DS2Params, nonlinear_N, phi_x_from_u
from ds2sim.core.errors import ConfigurationError
from ds2sim.core.general_system import (
    DispersionPolynomial,
    GeneralSystemSpec,
    PowerSeries,
    derivative_symbol,
    ds2_system_spec,
    general_evolve,
    general_existence_time,
    general_free_evolve,
    general_rhs,
    nls_system_spec,
    second_order_symbol,
    series_eval,
    solve_P,
)
from ds2sim.core.spectral import Grid2D, PeriodicGrid, SpectralField, forward_transform, sobolev_norm
from ds2sim.core.timestepper import PicardConfig, evolve

from support import gaussian, l2_distance, random_field, smooth_field


def linear_spec(n=2):
    identity = tuple(tuple(1.0 if i == j else 0.0 for j in range(n)) for i in range(n))
    return GeneralSystemSpec(
        n=n,
        omega=DispersionPolynomial(tuple((tuple(2 if i == j else 0 for j in range(n)), 1.0) for i in range(n))),
        a=identity,
        b=(0.0,) * n,
    )


class TestSeries(unittest.TestCase):
    def test_zero_series(self):
        u = np.array([1.0 + 2.0j, -3.0j])
        self.assertFalse(np.any(series_eval(PowerSeries(), u, np.conj(u))))

    def test_modulus_squared(self):
        u = np.full((4, 4), 3.0 + 4.0j)
        assert_allclose(series_eval(PowerSeries((((1, 1), 1.0),)), u, np.conj(u)), np.full((4, 4), 25.0))

    def test_cubic_term(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        series = PowerSeries((((2, 1), -1.5),))
        assert_allclose(series_eval(series, u, np.conj(u)), -1.5 * np.abs(u) ** 2 * u, rtol=0, atol=1e-13)

    def test_shape_mismatch(self):
        with self.assertRaises(ConfigurationError):
            series_eval(PowerSeries(), np.zeros(3), np.zeros(4))

    def test_degree(self):
        series = PowerSeries((((2, 1), 1.0), ((3, 2), 0.0), ((1, 0), 2j)))
        self.assertEqual(series.degree, 3)
        self.assertFalse(series.is_zero)


class TestSpecValidation(unittest.TestCase):
    def test_constant_term_is_rejected(self):
        with self.assertRaises(ConfigurationError) as ctx:
            GeneralSystemSpec(n=1, omega=DispersionPolynomial(), a=((1.0,),), b=(0.0,),
                              g=PowerSeries((((0, 0), 1.0),)))
        self.assertIn("g.term.0.0", str(ctx.exception))

    def test_degree_cap(self):
        with self.assertRaises(ConfigurationError):
            GeneralSystemSpec(n=1, omega=DispersionPolynomial(), a=((1.0,),), b=(0.0,),
                              g=PowerSeries((((4, 3), 1.0),)))

    def test_complex_dispersion_is_rejected(self):
        with self.assertRaises(ConfigurationError) as ctx:
            DispersionPolynomial((((2,), 1.0 + 0.5j),))
        self.assertIn("omega.term.2", str(ctx.exception))

    def test_sobolev_threshold_depends_on_dimension(self):
        spec = linear_spec(1)
        self.assertEqual(spec.p, 1.5)
        with self.assertRaises(ConfigurationError):
            GeneralSystemSpec(n=3, omega=DispersionPolynomial(), a=((1, 0, 0), (0, 1, 0), (0, 0, 1)),
                              b=(0, 0, 0), p=1.5)

    def test_non_elliptic_operator_is_rejected_on_the_lattice(self):
        spec = GeneralSystemSpec(
            n=2, omega=DispersionPolynomial(), a=((1.0, 0.0), (0.0, -1.0)), b=(0.0, 0.0),
            f_bar=(PowerSeries((((1, 1), 1.0),)), PowerSeries()),
            h_bar=(PowerSeries((((1, 0), 1.0),)), PowerSeries()),
        )
        with self.assertRaises(ConfigurationError) as ctx:
            spec.check_grid(Grid2D(8, 8))
        self.assertEqual(ctx.exception.key, "P")

    def test_operator_is_unchecked_without_a_constraint(self):
        spec = GeneralSystemSpec(n=2, omega=DispersionPolynomial(), a=((0.0, 0.0), (0.0, 0.0)), b=(0.0, 0.0))
        spec.check_grid(Grid2D(8, 8))
        with self.assertRaises(ConfigurationError):
            spec.check_elliptic(Grid2D(8, 8))

    def test_dimension_mismatch(self):
        with self.assertRaises(ConfigurationError):
            linear_spec(2).check_grid(PeriodicGrid((8,), (1.0,)))


class TestSymbols(unittest.TestCase):
    """Derive the operator symbols from finite differences of a plane wave."""

    def setUp(self):
        self.grid = Grid2D(32, 32)
        self.mode = (1, 2)
        self.h = 1e-4

    def wave(self, x, y):
        return np.exp(1j * (self.mode[0] * x + self.mode[1] * y))

    def apply(self, symbol):
        field = SpectralField.single_mode(self.grid, self.mode)
        return field.with_coeffs(symbol * field.coeffs).values()

    def test_first_derivatives(self):
        x, y = self.grid.mesh
        h = self.h
        fd_x = (self.wave(x + h, y) - self.wave(x - h, y)) / (2 * h)
        fd_y = (self.wave(x, y + h) - self.wave(x, y - h)) / (2 * h)
        assert_allclose(self.apply(derivative_symbol(self.grid, 0)), fd_x, rtol=0, atol=1e-6)
        assert_allclose(self.apply(derivative_symbol(self.grid, 1)), fd_y, rtol=0, atol=1e-6)

    def test_second_order_operator(self):
        x, y = self.grid.mesh
        h = self.h
        a = ((1.0, 0.5), (0.5, 2.0))
        b = (0.3, -0.7)
        c = 0.25
        u = self.wave
        uxx = (u(x + h, y) - 2 * u(x, y) + u(x - h, y)) / h ** 2
        uyy = (u(x, y + h) - 2 * u(x, y) + u(x, y - h)) / h ** 2
        uxy = (u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h) + u(x - h, y - h)) / (4 * h ** 2)
        ux = (u(x + h, y) - u(x - h, y)) / (2 * h)
        uy = (u(x, y + h) - u(x, y - h)) / (2 * h)
        fd = a[0][0] * uxx + 2 * a[0][1] * uxy + a[1][1] * uyy + b[0] * ux + b[1] * uy + c * u(x, y)
        symbol = second_order_symbol(a, b, c, self.grid)
        assert_allclose(self.apply(symbol), fd, rtol=0, atol=1e-6 * np.max(np.abs(fd)))


class TestSolveP(unittest.TestCase):
    def test_zero_forcing(self):
        grid = Grid2D(8, 8)
        spec = ds2_system_spec(DS2Params(gamma=1.0, lam=1.0, mu=1.0))
        zero = SpectralField.zeros(grid)
        for component in solve_P([zero, zero], spec):
            self.assertFalse(np.any(component.coeffs))

    def test_matches_the_ds2_mean_flow(self):
        grid = Grid2D(16, 16, 8.0, 8.0)
        mu = 1.3
        spec = ds2_system_spec(DS2Params(gamma=1.0, lam=1.0, mu=mu))
        u = smooth_field(grid, np.random.default_rng(1))
        density = forward_transform(mu * np.abs(u.values()) ** 2, grid)
        phi_x, phi_y = solve_P([density, SpectralField.zeros(grid)], spec)
        assert_allclose(phi_x.coeffs, phi_x_from_u(u, mu).coeffs, rtol=0, atol=1e-12)
        self.assertEqual(phi_y.coeffs[0, 0], 0.0)

    def test_single_mode_in_one_dimension(self):
        grid = PeriodicGrid((16,), (2 * np.pi,))
        spec = GeneralSystemSpec(n=1, omega=DispersionPolynomial(), a=((1.0,),), b=(0.0,))
        c = 0.4 - 0.2j
        forcing = SpectralField.single_mode(grid, (3,), c)
        (gradient,) = solve_P([forcing], spec)
        self.assertAlmostEqual(gradient.coefficient((3,)), c, places=14)

    def test_origin_mode_is_always_zero(self):
        grid = Grid2D(8, 8)
        spec = ds2_system_spec(DS2Params(mu=1.0))
        forcing = [random_field(grid, 1), random_field(grid, 2)]
        for component in solve_P(forcing, spec):
            self.assertEqual(component.coeffs[0, 0], 0.0)


class TestGeneralRhs(unittest.TestCase):
    def test_zero_field(self):
        spec = ds2_system_spec(DS2Params(gamma=1.0, lam=1.0, mu=1.0))
        self.assertFalse(np.any(general_rhs(SpectralField.zeros(Grid2D(8, 8)), spec).coeffs))

    def test_matches_the_ds2_nonlinearity(self):
        params = DS2Params(gamma=1.0, lam=0.5, mu=1.0)
        spec = ds2_system_spec(params)
        for seed in range(10):
            u = random_field(Grid2D(8, 8), seed=seed)
            assert_allclose(general_rhs(u, spec).coeffs, nonlinear_N(u, params).coeffs, rtol=0, atol=1e-10)

    def test_cubic_plane_wave_in_one_dimension(self):
        grid = PeriodicGrid((16,), (2 * np.pi,))
        A = 0.7j
        u = SpectralField.single_mode(grid, (2,), A)
        result = general_rhs(u, nls_system_spec(1.0))
        self.assertAlmostEqual(result.coefficient((2,)), abs(A) ** 2 * A, places=14)
        others = result.coeffs.copy()
        others[2] = 0.0
        self.assertLess(np.max(np.abs(others)), 1e-14)


class TestGeneralEvolve(unittest.TestCase):
    def test_linear_spec_is_the_free_flow(self):
        spec = linear_spec(2)
        u0 = random_field(Grid2D(16, 16), seed=3)
        trajectory = general_evolve(u0, spec, 0.5, 0.1, PicardConfig())
        self.assertLessEqual(l2_distance(trajectory.final, general_free_evolve(u0, spec, 0.5)), 1e-10)
        for p in (0.0, 1.5, 3.0):
            before, after = sobolev_norm(u0, p), sobolev_norm(trajectory.final, p)
            self.assertLessEqual(abs(after - before), 1e-12 * before)

    def test_zero_is_a_fixed_point(self):
        spec = ds2_system_spec(DS2Params(gamma=-2.0, lam=1.0, mu=1.0))
        zero = SpectralField.zeros(Grid2D(8, 8))
        trajectory = general_evolve(zero, spec, 0.1, 0.05, PicardConfig())
        self.assertFalse(np.any(trajectory.final.coeffs))

    def test_reproduces_native_ds2_trajectories(self):
        params = DS2Params(gamma=-2.0, lam=1.0, mu=1.0)
        u0 = gaussian(Grid2D(32, 32, 20.0, 20.0), 2.0)
        native = evolve(u0, 0.05, 0.005, params, PicardConfig()).final
        general = general_evolve(u0, ds2_system_spec(params), 0.05, 0.005, PicardConfig()).final
        self.assertLessEqual(l2_distance(native, general), 1e-9)

    def test_nls_plane_wave_phase(self):
        grid = PeriodicGrid((16,), (2 * np.pi,))
        gamma, A = 2.0, 0.5
        u0 = SpectralField.single_mode(grid, (1,), A)
        trajectory = general_evolve(u0, nls_system_spec(gamma), 0.1, 0.005, PicardConfig(p=1.0))
        expected = A * np.exp(-1j * (1.0 + gamma * A ** 2) * 0.1)
        self.assertLess(abs(trajectory.final.coefficient((1,)) - expected), 1e-8)

    def test_existence_time_of_a_linear_spec(self):
        T_star, report = general_existence_time(random_field(Grid2D(8, 8)), linear_spec(2), PicardConfig(), 2.0)
        self.assertEqual(T_star, 2.0)
        self.assertEqual(len(report.probes), 1)


if __name__ == '__main__':
    unittest.main()
