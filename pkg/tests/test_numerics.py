import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab.numerics import (
    Field2,
    GridError,
    GridMismatchError,
    OdeProblem,
    derivative,
    inner,
    integrate_ode,
    make_grid,
)


class TestMakeGrid:
    def test_rejects_small_n(self):
        with pytest.raises(GridError):
            make_grid(40.0, 5, "collocation")

    def test_rejects_nonpositive_half_width(self):
        with pytest.raises(GridError):
            make_grid(-1.0, 64)

    def test_collocation_spacing(self):
        g = make_grid(40.0, 4096, "collocation")
        assert g.dx == pytest.approx(80.0 / 4095, rel=0, abs=0)
        assert g.x[0] == -40.0 and g.x[-1] == 40.0

    def test_periodic_spacing(self):
        g = make_grid(60.0, 8192, "periodic")
        assert g.dx == pytest.approx(120.0 / 8192, rel=0, abs=0)
        assert g.x[0] == -60.0
        assert g.x[-1] == pytest.approx(60.0 - g.dx)

    def test_symmetric_about_zero(self):
        g = make_grid(25.0, 128, "collocation")
        assert np.abs(g.x + g.x[::-1]).max() < 1e-14


class TestInner:
    def test_zero_field(self, default_grid):
        z = Field2.from_scalar(default_grid, np.zeros(default_grid.n))
        assert inner(z, z) == 0.0

    def test_component_orthogonality(self, default_grid):
        phi3 = np.sqrt(2) / np.cosh(default_grid.x)
        u = Field2.from_scalar(default_grid, phi3)
        v = Field2.from_scalar(default_grid, np.zeros_like(phi3), second=phi3)
        assert inner(u, v) == pytest.approx(0.0, abs=1e-14)

    def test_sech_squared_integral(self, default_grid):
        sech = 1.0 / np.cosh(default_grid.x)
        u = Field2.from_scalar(default_grid, sech)
        # int sech^2 = [tanh] = 2
        assert inner(u, u) == pytest.approx(2.0, abs=1e-8)

    def test_grid_mismatch(self, default_grid):
        other = make_grid(40.0, 2048, "collocation")
        with pytest.raises(GridMismatchError):
            inner(Field2.from_scalar(default_grid, np.ones(default_grid.n)),
                  Field2.from_scalar(other, np.ones(other.n)))

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_bilinear_symmetric(self, a, b):
        g = make_grid(20.0, 256, "collocation")
        x = g.x
        u = Field2.from_scalar(g, np.exp(-x ** 2))
        v = Field2.from_scalar(g, x * np.exp(-x ** 2 / 2))
        w = Field2.from_scalar(g, np.cos(x) * np.exp(-x ** 2 / 3))
        lhs = inner(Field2(g, a * u.values + b * v.values), w)
        assert lhs == pytest.approx(a * inner(u, w) + b * inner(v, w), abs=1e-10)
        assert inner(u, v) == pytest.approx(inner(v, u), abs=1e-12)

    def test_positive_definite(self, rng, default_grid):
        vals = rng.normal(size=(default_grid.n, 2)) * np.exp(-default_grid.x[:, None] ** 2 / 50)
        u = Field2(default_grid, vals.astype(complex))
        assert inner(u, u) > 0


class TestDerivative:
    def test_annihilates_constants(self, default_grid):
        c = Field2.from_scalar(default_grid, np.ones(default_grid.n))
        assert np.abs(derivative(c, 1).values).max() < 1e-10
        assert np.abs(derivative(c, 2).values).max() < 1e-10

    def test_sin_first_derivative(self, fine_grid):
        u = Field2.from_scalar(fine_grid, np.sin(fine_grid.x))
        d = derivative(u, 1)
        assert np.abs(d.values[:, 0] - np.cos(fine_grid.x)).max() < 1e-6

    def test_sech_second_derivative(self, fine_grid):
        x = fine_grid.x
        sech = 1.0 / np.cosh(x)
        u = Field2.from_scalar(fine_grid, sech)
        d2 = derivative(u, 2)
        exact = sech - 2 * sech ** 3
        assert np.abs(d2.values[:, 0] - exact).max() < 1e-5

    def test_periodic_spectral(self):
        g = make_grid(np.pi * 8, 256, "periodic")
        u = Field2.from_scalar(g, np.sin(g.x))
        d = derivative(u, 1)
        assert np.abs(d.values[:, 0] - np.cos(g.x)).max() < 1e-11

    def test_summation_by_parts(self, default_grid):
        # compactly supported fields: <u', v> = -<u, v'> to O(h^4)
        x = default_grid.x
        u = Field2.from_scalar(default_grid, np.exp(-x ** 2))
        v = Field2.from_scalar(default_grid, x * np.exp(-x ** 2 / 2))
        lhs = inner(derivative(u, 1), v) + inner(u, derivative(v, 1))
        assert abs(lhs) < 1e-9


class TestIntegrateOde:
    def test_exponential(self):
        prob = OdeProblem(1, lambda x, y: y, tolerance=1e-10)
        y = integrate_ode(prob, np.array([1.0 + 0j]), 0.0, 1.0)
        assert abs(y[0] - np.e) < 1e-8

    def test_zero_rhs_exact(self):
        prob = OdeProblem(2, lambda x, y: np.zeros(2, dtype=complex))
        y0 = np.array([1.0 + 2.0j, -0.5j])
        y = integrate_ode(prob, y0, 0.0, 5.0)
        assert np.array_equal(y, y0)

    def test_harmonic_oscillator_period(self):
        prob = OdeProblem(2, lambda x, y: np.array([y[1], -y[0]]), tolerance=1e-10)
        y = integrate_ode(prob, np.array([1.0 + 0j, 0.0 + 0j]), 0.0, 2 * np.pi)
        assert np.abs(y - np.array([1.0, 0.0])).max() < 1e-7

    def test_linear_system_within_ten_tolerances(self):
        tol = 1e-8
        a = np.array([[0.0, 1.0], [-4.0, 0.0]])
        prob = OdeProblem(2, lambda x, y: a @ y, tolerance=tol)
        y = integrate_ode(prob, np.array([0.0 + 0j, 2.0 + 0j]), 0.0, 1.0)
        exact = np.array([np.sin(2.0), 2 * np.cos(2.0)])
        assert np.abs(y - exact).max() < 10 * tol * 10  # generous per-step accumulation

    def test_dense_output(self):
        prob = OdeProblem(1, lambda x, y: y, tolerance=1e-10)
        _, interp = integrate_ode(prob, np.array([1.0 + 0j]), 0.0, 1.0, dense=True)
        assert abs(interp(0.5)[0] - np.exp(0.5)) < 1e-8


class TestField2:
    def test_evenness_flag(self, default_grid):
        even = Field2.from_scalar(default_grid, np.cosh(default_grid.x) ** -1)
        odd = Field2.from_scalar(default_grid, np.tanh(default_grid.x))
        assert even.is_even()
        assert not odd.is_even()

    def test_periodic_reflection(self):
        g = make_grid(10.0, 64, "periodic")
        u = Field2.from_scalar(g, np.cos(np.pi * g.x / 10.0))
        assert u.is_even()
