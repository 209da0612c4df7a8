import numpy as np
import pytest

from nlslab.numerics import Field2, inner, make_grid, trapezoid_weights
from nlslab.operators import (
    U_INVERSE,
    build_operator,
    conjugation_check,
    ladder_coupling,
    ladder_identity_residual,
)
from nlslab.profiles import (
    Params,
    soliton,
    soliton_omega_derivative,
    soliton_values,
)


def sup_interior(vals, margin=8):
    return float(np.abs(vals[margin:-margin]).max())


class TestKernelRelations:
    def test_l_minus_annihilates_soliton(self, default_grid):
        params = Params(2.8, 1.3)
        lm = build_operator(params, "L_minus", default_grid)
        out = lm.apply(soliton(params, default_grid))
        assert sup_interior(out.values[:, 0]) < 1e-5

    def test_l_plus_on_omega_derivative(self, default_grid):
        # differentiating the profile equation in omega: L+ d_omega phi = -phi
        params = Params(3.0, 1.0)
        lp = build_operator(params, "L_plus", default_grid)
        dphi = Field2.from_scalar(default_grid, soliton_omega_derivative(params, default_grid.x))
        out = lp.apply(dphi)
        target = -soliton_values(params, default_grid.x)
        assert sup_interior(out.values[:, 0] - target) < 1e-4

    def test_generalized_kernel(self, default_grid):
        params = Params(2.7, 1.0)
        mat = build_operator(params, "matrix_L", default_grid)
        phi = soliton_values(params, default_grid.x)
        v = np.zeros((default_grid.n, 2), dtype=complex)
        v[:, 1] = phi
        out = mat.apply(Field2(default_grid, v))
        assert sup_interior(out.values) < 1e-4
        w = np.zeros((default_grid.n, 2), dtype=complex)
        w[:, 0] = soliton_omega_derivative(params, default_grid.x)
        out2 = mat.apply(mat.apply(Field2(default_grid, w)))
        assert sup_interior(out2.values) < 1e-4


class TestSymmetries:
    @pytest.mark.parametrize("kind", ["L_plus", "L_minus"])
    def test_scalar_operators_symmetric(self, kind, default_grid, rng):
        params = Params(2.9, 1.0)
        op = build_operator(params, kind, default_grid)
        x = default_grid.x
        u = Field2.from_scalar(default_grid, np.exp(-x ** 2 / 6) * (1 + 0.3 * np.sin(x)))
        v = Field2.from_scalar(default_grid, np.exp(-x ** 2 / 8) * np.cos(2 * x))
        lhs = inner(op.apply(u), v)
        rhs = inner(u, op.apply(v))
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_sigma1_anticommutes_with_h(self, default_grid):
        params = Params(2.8, 1.0)
        h = build_operator(params, "matrix_H", default_grid)
        x = default_grid.x
        v = np.stack([np.exp(-x ** 2 / 5), np.sin(x) * np.exp(-x ** 2 / 7)], axis=1).astype(complex)
        u = Field2(default_grid, v)
        sigma1 = lambda f: Field2(default_grid, f.values[:, ::-1])
        lhs = sigma1(h.apply(u)).values
        rhs = -h.apply(sigma1(u)).values
        scale = np.abs(lhs).max()
        assert np.abs(lhs - rhs).max() / scale < 1e-8

    def test_sigma3_h_selfadjoint(self, default_grid):
        # sigma3 H = H* sigma3 as a quadratic-form identity
        params = Params(3.1, 1.0)
        h = build_operator(params, "matrix_H", default_grid)
        x = default_grid.x
        u = Field2(default_grid, np.stack(
            [np.exp(-x ** 2 / 5), np.cos(x) * np.exp(-x ** 2 / 6)], axis=1).astype(complex))
        v = Field2(default_grid, np.stack(
            [x * np.exp(-x ** 2 / 7), np.exp(-x ** 2 / 4)], axis=1).astype(complex))
        sigma3 = lambda f: Field2(default_grid, f.values * np.array([1.0, -1.0]))
        lhs = inner(sigma3(h.apply(u)), v)
        rhs = inner(sigma3(u), h.apply(v))
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


class TestConjugation:
    def test_gaussian_cubic(self, default_grid):
        params = Params(3.0, 1.0)
        x = default_grid.x
        v = Field2(default_grid, np.stack(
            [np.exp(-x ** 2 / 4), 0.5 * np.exp(-x ** 2 / 3)], axis=1).astype(complex))
        assert conjugation_check(params, default_grid, v) < 1e-6

    def test_zero_field(self, default_grid):
        params = Params(3.0, 1.0)
        z = Field2(default_grid, np.zeros((default_grid.n, 2), dtype=complex))
        assert conjugation_check(params, default_grid, z) == 0.0

    def test_sech_other_params(self, default_grid):
        params = Params(2.8, 1.3)
        x = default_grid.x
        v = Field2(default_grid, np.stack(
            [1 / np.cosh(x), 0.2 / np.cosh(x) ** 2], axis=1).astype(complex))
        assert conjugation_check(params, default_grid, v) < 1e-6


class TestLadder:
    def test_couplings(self):
        p = 3.0
        assert ladder_coupling(p, 0) == pytest.approx(p * (p + 1) / 2)
        assert ladder_coupling(p, 2) == pytest.approx((3 - p) / 2 * 1.0)

    def test_identities_gaussian_cubic(self, default_grid):
        params = Params(3.0, 1.0)
        v = Field2.from_scalar(default_grid, np.exp(-default_grid.x ** 2 / 4))
        r1, r2 = ladder_identity_residual(params, default_grid, v)
        assert r1 < 1e-5 and r2 < 1e-5

    def test_identities_sech_squared(self, default_grid):
        params = Params(2.7, 1.0)
        v = Field2.from_scalar(default_grid, np.cosh(default_grid.x) ** -2)
        r1, r2 = ladder_identity_residual(params, default_grid, v)
        assert r1 < 1e-5 and r2 < 1e-5

    def test_zero_field(self, default_grid):
        params = Params(2.7, 1.0)
        z = Field2.from_scalar(default_grid, np.zeros(default_grid.n))
        assert ladder_identity_residual(params, default_grid, z) == (0.0, 0.0)

    def test_cubic_upper_ladder_is_free(self, default_grid):
        # k_2(3) = 0 makes L_2 = L_3 = -d_xx + 1
        params = Params(3.0, 1.0)
        x = default_grid.x
        v = Field2.from_scalar(default_grid, np.exp(-x ** 2 / 5) * np.cos(x))
        from nlslab.numerics import derivative_values

        target = -derivative_values(v.values[:, 0], default_grid, 2) + v.values[:, 0]
        for j in (2, 3):
            out = build_operator(params, "ladder", default_grid, j=j).apply(v)
            assert sup_interior(out.values[:, 0] - target) < 1e-6

    def test_invalid_index(self, default_grid):
        with pytest.raises(ValueError):
            build_operator(Params(3.0, 1.0), "ladder", default_grid, j=-1)


class TestDarbouxTransport:
    @pytest.mark.parametrize("k", [0.5, 1.0])
    def test_plane_wave_chain_cubic(self, k, default_grid):
        # (S1*)^2 applied to the oscillatory w-solution reproduces the
        # explicit eigenfunction pair of the linearization at p = 3
        params = Params(3.0, 1.0)
        grid = default_grid
        x = grid.x
        lam_d = 1j * (1 + k ** 2)
        w1 = np.exp(1j * k * x)  # first component of the plane-wave solution
        s1a = build_operator(params, "S1_adjoint", grid)
        l0 = build_operator(params, "L_plus", grid)
        xi1 = s1a.apply_scalar(s1a.apply_scalar(w1))
        xi2 = -l0.apply_scalar(xi1) / lam_d
        th, s2 = np.tanh(x), np.cosh(x) ** -2
        ref1 = np.exp(1j * k * x) * (1 - k ** 2 - 2j * k * th - 2 * s2)
        ref2 = np.exp(1j * k * x) * 1j * (1 - k ** 2 - 2j * k * th)
        mask = np.abs(x) <= 10
        assert np.abs(xi1[mask] - ref1[mask]).max() < 1e-6 * np.abs(ref1[mask]).max()
        assert np.abs(xi2[mask] - ref2[mask]).max() < 1e-5 * np.abs(ref2[mask]).max()

    def test_s1_factorization_scaled_omega(self, default_grid):
        params = Params(2.9, 1.6)
        v = Field2.from_scalar(default_grid, np.exp(-default_grid.x ** 2 / 4))
        r1, _ = ladder_identity_residual(params, default_grid, v)
        assert r1 < 1e-5


def test_u_matrix_inverse():
    from nlslab.operators import U_MATRIX

    assert np.abs(U_MATRIX @ U_INVERSE - np.eye(2)).max() < 1e-15
