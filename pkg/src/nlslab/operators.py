"""Linearized operators at the ground state and their structural identities.

Scalar operators L+ and L-, the matrix linearization
L = [[0, L-], [-L+, 0]], its conjugate H = sigma3 (-d_xx + omega) + V, the
ladder family L_j and the first-order factor S1 with adjoint S1*.  All
operators are matrix-free: only applications are provided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import Field2, Grid, derivative_values, trapezoid_weights
from .profiles import Params, soliton_values

__all__ = [
    "LinearOperator",
    "build_operator",
    "conjugation_check",
    "ladder_identity_residual",
    "ladder_coupling",
    "U_MATRIX",
    "U_INVERSE",
]

# change of frame between the real linearization and H
U_MATRIX = np.array([[1.0, 1.0], [1.0j, -1.0j]])
U_INVERSE = 0.5 * np.array([[1.0, -1.0j], [1.0, 1.0j]])

_SCALAR_KINDS = ("L_plus", "L_minus", "ladder", "S1", "S1_adjoint")
_MATRIX_KINDS = ("matrix_L", "matrix_H")


def ladder_coupling(p: float, j: int) -> float:
    """k_{j-1}(p) k_j(p) with k_j = (p+1)/2 - j(p-1)/2."""
    kj = lambda m: (p + 1) / 2.0 - m * (p - 1) / 2.0
    return kj(j - 1) * kj(j)


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free linear operator on two-component fields.

    Scalar kinds act on the first component and zero the second.
    """

    params: Params
    kind: str
    grid: Grid
    j: int | None = None
    _apply_values: Callable[[np.ndarray], np.ndarray] = None

    def apply(self, u: Field2) -> Field2:
        if u.grid != self.grid:
            raise ValueError("field grid does not match operator grid")
        return Field2(self.grid, self._apply_values(u.values))

    def apply_scalar(self, vals: np.ndarray) -> np.ndarray:
        """Apply a scalar kind to a plain sample array."""
        if self.kind in _MATRIX_KINDS:
            raise ValueError(f"{self.kind} is not a scalar operator")
        v = np.zeros((self.grid.n, 2), dtype=complex)
        v[:, 0] = vals
        return self._apply_values(v)[:, 0]


def _schroedinger_apply(grid: Grid, omega: float, potential: np.ndarray):
    def apply(vals):
        out = np.zeros_like(vals, dtype=complex)
        out[:, 0] = -derivative_values(vals[:, 0], grid, 2) + (omega - potential) * vals[:, 0]
        return out

    return apply


def build_operator(params: Params, kind: str, grid: Grid, j: int | None = None) -> LinearOperator:
    """Construct one of the operators associated with the linearization.

    kind is one of ``L_plus``, ``L_minus``, ``matrix_L``, ``matrix_H``,
    ``ladder`` (with index j >= 0), ``S1`` or ``S1_adjoint``.
    """
    p, omega = params.p, params.omega
    x = grid.x
    phi_pm1 = soliton_values(params, x) ** (p - 1)
    sw = np.sqrt(omega)
    tanh_half = np.tanh((p - 1) * sw * x / 2.0)

    if kind == "L_plus":
        app = _schroedinger_apply(grid, omega, p * phi_pm1)
    elif kind == "L_minus":
        app = _schroedinger_apply(grid, omega, phi_pm1)
    elif kind == "ladder":
        if j is None or j < 0:
            raise ValueError(f"ladder requires an index j >= 0, got {j}")
        # k_{j-1} k_j (2/(p+1)) phi_omega^{p-1}
        pot = ladder_coupling(p, j) * (2.0 / (p + 1)) * phi_pm1
        app = _schroedinger_apply(grid, omega, pot)
    elif kind == "S1":

        def app(vals):
            out = np.zeros_like(vals, dtype=complex)
            out[:, 0] = derivative_values(vals[:, 0], grid, 1) + sw * tanh_half * vals[:, 0]
            return out

    elif kind == "S1_adjoint":

        def app(vals):
            out = np.zeros_like(vals, dtype=complex)
            out[:, 0] = -derivative_values(vals[:, 0], grid, 1) + sw * tanh_half * vals[:, 0]
            return out

    elif kind == "matrix_L":

        def app(vals):
            d2 = derivative_values(vals, grid, 2)
            lm = -d2[:, 1] + (omega - phi_pm1) * vals[:, 1]
            lp = -d2[:, 0] + (omega - p * phi_pm1) * vals[:, 0]
            return np.stack([lm, -lp], axis=1)

    elif kind == "matrix_H":
        v11 = -(p + 1) / 2.0 * phi_pm1
        v12 = -(p - 1) / 2.0 * phi_pm1

        def app(vals):
            d2 = derivative_values(vals, grid, 2)
            r1 = (-d2[:, 0] + omega * vals[:, 0]) + v11 * vals[:, 0] + v12 * vals[:, 1]
            r2 = -(-d2[:, 1] + omega * vals[:, 1]) - v12 * vals[:, 0] - v11 * vals[:, 1]
            return np.stack([r1, r2], axis=1)

    else:
        raise ValueError(f"unknown operator kind {kind!r}")

    return LinearOperator(params=params, kind=kind, grid=grid, j=j, _apply_values=app)


def _rel_l2(grid: Grid, resid: np.ndarray, ref: np.ndarray, margin: int = 0) -> float:
    w = trapezoid_weights(grid)
    sl = slice(margin, grid.n - margin) if margin else slice(None)
    num = np.sqrt(np.sum(w[sl] * np.abs(resid[sl]) ** 2))
    den = np.sqrt(np.sum(w[sl] * np.abs(ref[sl]) ** 2))
    return float(num / max(den, 1e-300))


def conjugation_check(params: Params, grid: Grid, test_field: Field2) -> float:
    """Relative L2 residual of  U^{-1} L U v - i H v."""
    mat_l = build_operator(params, "matrix_L", grid)
    mat_h = build_operator(params, "matrix_H", grid)
    v = test_field.values
    uv = v @ U_MATRIX.T
    luv = mat_l._apply_values(uv)
    lhs = luv @ U_INVERSE.T
    rhs = 1j * mat_h._apply_values(v)
    scale = np.sqrt(np.sum(trapezoid_weights(grid) * np.sum(np.abs(v) ** 2, axis=1)))
    if scale == 0.0:
        return 0.0
    w = trapezoid_weights(grid)
    num = np.sqrt(np.sum(w * np.sum(np.abs(lhs - rhs) ** 2, axis=1)))
    return float(num / scale)


def ladder_identity_residual(params: Params, grid: Grid, test_field: Field2,
                             margin: int = 8) -> tuple[float, float]:
    """Relative residuals of L1 = S1* S1 and S1^2 L0 L1 = L2 L3 S1^2.

    Evaluated on the grid interior (an 8-point boundary layer is excluded;
    one-sided stencils degrade the compositions near the edges).
    """
    v = test_field.values[:, 0]
    op = {name: build_operator(params, name, grid) for name in ("S1", "S1_adjoint")}
    ladder = {j: build_operator(params, "ladder", grid, j=j) for j in range(4)}
    s1 = lambda u: op["S1"].apply_scalar(u)
    s1a = lambda u: op["S1_adjoint"].apply_scalar(u)
    lj = lambda j, u: ladder[j].apply_scalar(u)

    l1v = lj(1, v)
    r1 = _rel_l2(grid, l1v - s1a(s1(v)), l1v, margin)

    lhs = s1(s1(lj(0, lj(1, v))))
    rhs = lj(2, lj(3, s1(s1(v))))
    r2 = _rel_l2(grid, lhs - rhs, lhs, margin)
    return r1, r2
