"""Soliton profiles, invariants, the nonlinearity and the refined profile.

The ground state of  i u_t + u_xx = -|u|^{p-1} u  at frequency omega is

    phi_omega(x) = omega^{1/(p-1)} ((p+1)/2)^{1/(p-1)}
                   sech^{2/(p-1)}((p-1) sqrt(omega) x / 2),

the positive even solution of  -phi'' + omega phi - phi^p = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .numerics import Field2, Grid, derivative_values, inner, trapezoid_weights

if TYPE_CHECKING:  # pragma: no cover
    from .modes import InternalMode

__all__ = [
    "Params",
    "RefinedProfile",
    "IllConditionedSystem",
    "soliton",
    "soliton_values",
    "soliton_x_derivative",
    "soliton_omega_derivative",
    "mass_energy",
    "nonlinearity",
    "nonlinearity_second_bilinear",
    "refined_profile",
    "kappa_weight",
]


class IllConditionedSystem(RuntimeError):
    """The refined-profile correction system is too ill-conditioned (|z| too large)."""


@dataclass(frozen=True)
class Params:
    """Nonlinearity exponent p in (1, 5) and frequency omega > 0."""

    p: float
    omega: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.p < 5.0:
            raise ValueError(f"p must be in (1, 5), got {self.p}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


def soliton_values(params: Params, x: np.ndarray) -> np.ndarray:
    p, w = params.p, params.omega
    amp = (w * (p + 1) / 2.0) ** (1.0 / (p - 1))
    return amp * np.cosh((p - 1) * np.sqrt(w) * x / 2.0) ** (-2.0 / (p - 1))


def soliton_x_derivative(params: Params, x: np.ndarray) -> np.ndarray:
    """phi_omega'(x) = -sqrt(omega) tanh((p-1) sqrt(omega) x / 2) phi_omega(x)."""
    p, w = params.p, params.omega
    return -np.sqrt(w) * np.tanh((p - 1) * np.sqrt(w) * x / 2.0) * soliton_values(params, x)


def soliton_omega_derivative(params: Params, x: np.ndarray) -> np.ndarray:
    """d/domega of phi_omega, from the scaling phi_omega = omega^{1/(p-1)} phi(sqrt(omega) x)."""
    p, w = params.p, params.omega
    phi = soliton_values(params, x)
    dphi = soliton_x_derivative(params, x)
    return (phi / (p - 1) + x * dphi / 2.0) / w


def soliton(params: Params, grid: Grid) -> Field2:
    """Ground-state profile as a field (real, second component zero)."""
    return Field2.from_scalar(grid, soliton_values(params, grid.x))


def mass_energy(params: Params, u: Field2) -> tuple[float, float]:
    """Mass Q = 1/2 int |u|^2 and energy E = 1/2 int |u'|^2 - int |u|^{p+1}/(p+1)."""
    w = trapezoid_weights(u.grid)
    absq = np.sum(np.abs(u.values) ** 2, axis=1)
    q = 0.5 * float(np.sum(w * absq))
    du = derivative_values(u.values, u.grid, 1)
    kin = 0.5 * float(np.sum(w * np.sum(np.abs(du) ** 2, axis=1)))
    pot = float(np.sum(w * absq ** ((params.p + 1) / 2.0))) / (params.p + 1)
    return q, kin - pot


def _safe_power(absu: np.ndarray, expo: float) -> np.ndarray:
    """|u|^expo with the zero-limit convention at |u| = 0 for negative expo."""
    if expo >= 0:
        return absu ** expo
    out = np.zeros_like(absu)
    nz = absu > 0
    out[nz] = absu[nz] ** expo
    return out


def _f0(p: float, u: np.ndarray) -> np.ndarray:
    return np.abs(u) ** (p - 1) * u


def _f1(p: float, u: np.ndarray, X: np.ndarray) -> np.ndarray:
    absu = np.abs(u)
    pair = np.real(u * np.conj(X))
    return absu ** (p - 1) * X + (p - 1) * _safe_power(absu, p - 3) * u * pair


def _f2(p: float, u: np.ndarray, X: np.ndarray) -> np.ndarray:
    absu = np.abs(u)
    pair = np.real(u * np.conj(X))
    t1 = 2 * (p - 1) * _safe_power(absu, p - 3) * X * pair
    t2 = (p - 1) * _safe_power(absu, p - 3) * u * np.abs(X) ** 2
    t3 = (p - 1) * (p - 3) * _safe_power(absu, p - 5) * u * pair ** 2
    return t1 + t2 + t3


def nonlinearity(params: Params, u: Field2, order: int = 0, *directions: Field2) -> Field2:
    """f(u) = |u|^{p-1} u and its first/second derivatives along directions.

    Acts on each component as a complex number.  order 1 takes one direction
    X and returns Df(u)X; order 2 takes one direction X and returns
    D^2 f(u) X^2.  Points with |u| = 0 use the limit convention Df = D^2 f = 0
    (the formulas involve |u|^{p-3}, singular there for p < 3).
    """
    p = params.p
    if order == 0:
        return Field2(u.grid, _f0(p, u.values))
    if order == 1:
        (X,) = directions
        return Field2(u.grid, _f1(p, u.values, X.values))
    if order == 2:
        (X,) = directions
        return Field2(u.grid, _f2(p, u.values, X.values))
    raise ValueError(f"order must be 0, 1 or 2, got {order}")


def nonlinearity_second_bilinear(params: Params, u: Field2, X: Field2, Y: Field2) -> Field2:
    """D^2 f(u)(X, Y) by polarization of the quadratic form."""
    p = params.p
    plus = _f2(p, u.values, X.values + Y.values)
    minus = _f2(p, u.values, X.values - Y.values)
    return Field2(u.grid, (plus - minus) / 4.0)


def kappa_weight(params: Params) -> float:
    """Exponential weight rate kappa = min(0.2, (p-1)/4) for cosh(kappa omega x)."""
    return min(0.2, (params.p - 1) / 4.0)


@dataclass(frozen=True)
class RefinedProfile:
    """Soliton dressed with the internal mode plus second-order corrections.

    ``phi`` stores the complex profile phi[omega, z] as (Re, Im) components.
    ``corrections`` are (theta_dot_correction, omega_dot_correction,
    z_dot_correction) entering the residual

        R[omega, z] = phi'' + f(phi) - theta_t phi + i omega_t d_omega phi
                      + i D_z phi . z_t

    with theta_t = omega + corrections[0], omega_t = corrections[1] and
    z_t = i lambda z + corrections[2].  ``orthogonality_residuals`` are the
    four pairings of R against (phi, i d_omega phi, i d_{z_j} phi), relative
    to the scale of R.
    """

    params: Params
    z: complex
    phi: Field2
    corrections: tuple[float, float, complex]
    residual: Field2
    residual_weighted_norm: float
    condition_number: float
    orthogonality_residuals: np.ndarray
    orthogonality_matrix: np.ndarray


def _pairing(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Real pairing <a, b> = int Re(a conj(b)) for complex scalar samples."""
    return float(np.sum(w * np.real(a * np.conj(b))))


def refined_profile(params: Params, z: complex, mode, grid: Grid,
                    cond_limit: float = 1e8) -> RefinedProfile:
    """Refined profile phi[omega, z] = phi_omega + z xi + conj(z) conj(xi).

    Solves the 4x4 linear system that makes the residual R[omega, z]
    orthogonal to i phi, i^2 d_omega phi and i^2 d_{z_j} phi (equivalently,
    the stated orthogonality pairings vanish), then evaluates R and its
    cosh-weighted norm.

    ``mode`` must be an internal mode at these params (its xi1/Im xi2 arrays
    sampled on ``grid``); its scale fixes the meaning of z.
    """
    z = complex(z)
    x = grid.x
    w = trapezoid_weights(grid)
    lam = mode.lam

    xi1, y2 = mode.xi1_on(grid), mode.y2_on(grid)
    dxi1, dy2 = mode.omega_derivative_on(grid)

    phi0 = soliton_values(params, x)
    dphi0 = soliton_omega_derivative(params, x)

    # complex avatars under the C = R^2 identification
    z1, z2 = z.real, z.imag
    phit = 2.0 * z1 * xi1 - 2.0j * z2 * y2
    phi = phi0 + phit
    dphi_dom = dphi0 + 2.0 * z1 * dxi1 - 2.0j * z2 * dy2
    dz1_phi = 2.0 * xi1 + 0j
    dz2_phi = -2.0j * y2

    p = params.p

    # residual at zero corrections: R0 = phi'' + f(phi) - omega phi
    #                                    + i D_z phi . (i lambda z)
    z0 = 1j * lam * z
    d2phi = derivative_values(phi, grid, 2)
    resid0 = (
        d2phi
        + _f0(p, phi)
        - params.omega * phi
        + 1j * (dz1_phi * z0.real + dz2_phi * z0.imag)
    )

    # conditions <i R, v_m> = 0 for v = (phi, i dphi_dom, i dz1_phi, i dz2_phi),
    # solved against the assembled residual so the orthogonality is exact to
    # solver precision
    vecs = [phi, 1j * dphi_dom, 1j * dz1_phi, 1j * dz2_phi]
    cols = [1j * phi, dphi_dom, dz1_phi, dz2_phi]
    m = np.array([[_pairing(w, c, v) for c in cols] for v in vecs])
    rhs = np.array([_pairing(w, 1j * resid0, v) for v in vecs])

    cond = float(np.linalg.cond(m))
    if cond > cond_limit:
        raise IllConditionedSystem(
            f"correction system condition number {cond:.3g} exceeds {cond_limit:.3g}; "
            f"|z| = {abs(z):.3g} too large"
        )
    sol = np.linalg.solve(m, rhs)
    theta_c, omega_c = float(sol[0]), float(sol[1])
    z_c = complex(sol[2], sol[3])

    resid = (
        resid0
        - theta_c * phi
        + 1j * omega_c * dphi_dom
        + 1j * (dz1_phi * z_c.real + dz2_phi * z_c.imag)
    )

    kap = kappa_weight(params)
    wt = np.cosh(kap * params.omega * x)
    wnorm = float(np.sqrt(np.sum(trapezoid_weights(grid) * np.abs(wt * resid) ** 2)))

    scale = max(float(np.sqrt(np.sum(w * np.abs(resid) ** 2))), 1e-300)
    orth = np.array([_pairing(w, 1j * resid, v) for v in vecs]) / (
        scale * np.array([max(np.sqrt(np.sum(w * np.abs(v) ** 2)), 1e-300) for v in vecs])
    )

    # matrix arranged as in the correction-system derivation, reported for
    # inspection; at z = 0 it is block-diagonal with blocks q'(omega) J^{-1}
    # (phase/frequency) and a multiple of J (mode amplitudes)
    a_report = np.array(
        [
            [_pairing(w, phi, 1j * phi), -_pairing(w, dphi_dom, phi),
             -_pairing(w, dz1_phi, phi), -_pairing(w, dz2_phi, phi)],
            [_pairing(w, phi, dphi_dom), -_pairing(w, 1j * dphi_dom, dphi_dom),
             -_pairing(w, 1j * dz1_phi, dphi_dom), -_pairing(w, 1j * dz2_phi, dphi_dom)],
            [_pairing(w, phi, dz1_phi), -_pairing(w, 1j * dphi_dom, dz1_phi),
             -_pairing(w, 1j * dz1_phi, dz1_phi), -_pairing(w, 1j * dz2_phi, dz1_phi)],
            [_pairing(w, phi, dz2_phi), -_pairing(w, 1j * dphi_dom, dz2_phi),
             -_pairing(w, 1j * dz1_phi, dz2_phi), -_pairing(w, 1j * dz2_phi, dz2_phi)],
        ]
    )

    phi_field = Field2(grid, np.stack([phi.real, phi.imag], axis=1))
    res_field = Field2(grid, np.stack([resid.real, resid.imag], axis=1))
    return RefinedProfile(
        params=params,
        z=z,
        phi=phi_field,
        corrections=(theta_c, omega_c, z_c),
        residual=res_field,
        residual_weighted_norm=wnorm,
        condition_number=cond,
        orthogonality_residuals=orth,
        orthogonality_matrix=a_report,
    )
