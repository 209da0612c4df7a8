"""Internal mode of the linearization: eigenvalue and eigenfunction.

Two independent routes to the eigenvalue lambda(p, omega) = omega lambda(p, 1):

* a Birman-Schwinger reduction, iterating  alpha = -(p-3)/2 * s(p, alpha)
  with lambda(p, 1) = 1 - alpha^2 (perturbative in p - 3);
* an Evans-function root search on the spectral gap (module ``jost``).

The eigenfunction is produced by a Darboux chain from the solution of a
dense integral equation, normalized so that its p -> 3 limit is the
threshold-resonance pair (1 - phi_3^2, i).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from .numerics import Field2, Grid, derivative_values, make_grid, trapezoid_weights
from .profiles import Params, soliton_values

__all__ = [
    "InternalMode",
    "BirmanSchwingerAssembly",
    "ModeRangeError",
    "NoConvergence",
    "convolution_T",
    "alpha_fixed_point",
    "find_lambda",
    "xi_build",
    "internal_mode",
    "resonance_mode_cubic",
    "xi_expansion_r1",
    "xi_expansion_r2",
    "BS_RANGE",
    "EVANS_MIN_OFFSET",
]

# documented convergence window of the fixed point (empirical)
BS_RANGE = 0.3
# below this |p - 3| the gap is too thin for Evans shooting
EVANS_MIN_OFFSET = 0.05

_DEFAULT_HALF_WIDTH = 40.0
_DEFAULT_N = 2048


class ModeRangeError(ValueError):
    """Requested method is outside its documented p-range."""


class NoConvergence(RuntimeError):
    """Fixed-point iteration failed to converge."""


def convolution_T(grid: Grid) -> Field2:
    """T = (e^{-sqrt(2)|.|}/2) * phi_3^2 by corrected trapezoid convolution.

    The trapezoid rule is corrected for the kernel kink on the diagonal,
    which restores O(h^4) accuracy; (-d_xx + 2) T = sqrt(2) phi_3^2 then
    holds to ~1e-9 on the default grids.
    """
    if grid.half_width < 30:
        raise ValueError("grid too narrow for the convolution tails (need half_width >= 30)")
    x = grid.x
    g = soliton_values(Params(3.0, 1.0), x) ** 2
    w = trapezoid_weights(grid)
    kern = 0.5 * np.exp(-np.sqrt(2.0) * np.abs(x[:, None] - x[None, :]))
    vals = kern @ (w * g) - (grid.dx ** 2 / 12.0) * np.sqrt(2.0) * g
    return Field2.from_scalar(grid, vals)


def _pp_matrices(p: float, x: np.ndarray):
    """Pointwise matrices P_p, |P_p|^{1/2}, P_p^{1/2} (each as 2x2 of arrays)."""
    phi_pm1 = soliton_values(Params(p, 1.0), x) ** (p - 1)
    base = phi_pm1 / (2.0 * (p + 1))
    pp = np.array([[(3 - p) * base, (p - 1) * base], [(p - 1) * base, (3 - p) * base]])
    c = np.sqrt(p - 2.0)
    half = soliton_values(Params(p, 1.0), x) ** ((p - 1) / 2.0) / (2.0 * np.sqrt(p + 1))
    abs_half = np.array([[(1 + c) * half, (1 - c) * half], [(1 - c) * half, (1 + c) * half]])
    p_half = np.array([abs_half[1], abs_half[0]])  # sigma_1 |P|^{1/2}
    return pp, abs_half, p_half


class BirmanSchwingerAssembly:
    """Dense kernels for the reduced eigenvalue problem on a collocation grid.

    ``n_alpha_entries(alpha)`` returns the two scalar kernels of N_alpha,
    ``s_value`` evaluates s(p, alpha) with a dense solve, and
    ``z_solve(alpha)`` returns the two components of
    (1 + (p-3) N_alpha P_p)^{-1} e_2.
    """

    def __init__(self, p: float, grid: Grid | None = None):
        if abs(p - 3.0) > BS_RANGE + 1e-12:
            raise ModeRangeError(
                f"Birman-Schwinger assembly documented for |p-3| <= {BS_RANGE}, got p = {p}"
            )
        self.p = float(p)
        self.grid = grid or make_grid(_DEFAULT_HALF_WIDTH, _DEFAULT_N, "collocation")
        self.x = self.grid.x
        self.w = trapezoid_weights(self.grid)
        self.absdiff = np.abs(self.x[:, None] - self.x[None, :])
        self.pp, self.abs_half, self.p_half = _pp_matrices(self.p, self.x)
        self._lu = None

    def n_alpha_entries(self, alpha: float):
        kappa = np.sqrt(2.0 - alpha ** 2)
        n1 = np.exp(-kappa * self.absdiff) / (2.0 * kappa)
        if alpha == 0.0:
            n2 = -self.absdiff / 2.0
        else:
            n2 = np.expm1(-alpha * self.absdiff) / (2.0 * alpha)
        return n1, n2

    def _m_dense(self, alpha: float) -> np.ndarray:
        """Weight-folded dense matrix of M_{alpha p} = P^{1/2} N_alpha |P|^{1/2}.

        Both kernels have slope jumps of -1 across the diagonal; an
        Euler-Maclaurin diagonal correction restores O(h^4) quadrature.
        """
        n1, n2 = self.n_alpha_entries(alpha)
        corr = self.grid.dx ** 2 / 12.0
        blocks = [[None, None], [None, None]]
        for a in range(2):
            for b in range(2):
                left1 = self.p_half[a][0]
                left2 = self.p_half[a][1]
                right1 = self.abs_half[0][b] * self.w
                right2 = self.abs_half[1][b] * self.w
                block = (
                    left1[:, None] * n1 * right1[None, :]
                    + left2[:, None] * n2 * right2[None, :]
                )
                block[np.diag_indices(self.grid.n)] -= corr * (
                    left1 * self.abs_half[0][b] + left2 * self.abs_half[1][b]
                )
                blocks[a][b] = block
        sw = np.sqrt(self.w)
        fold = np.concatenate([sw, sw])
        return np.block(blocks) * (fold[:, None] / fold[None, :])

    def s_value(self, alpha: float) -> float:
        """s(p, alpha) = <|P|^{1/2} (1 + (p-3) M)^{-1} P^{1/2} e_2, e_2>."""
        p = self.p
        a_mat = np.eye(2 * self.grid.n) + (p - 3.0) * self._m_dense(alpha)
        sw = np.sqrt(self.w)
        rhs = np.concatenate([self.p_half[0][1] * sw, self.p_half[1][1] * sw])
        if self._lu is None:
            self._lu = lu_factor(a_mat)
            sol = lu_solve(self._lu, rhs)
        else:
            # stale-LU iterative refinement: the factorization from a nearby
            # alpha is reused as a preconditioner
            sol = lu_solve(self._lu, rhs)
            for _ in range(6):
                resid = rhs - a_mat @ sol
                if np.abs(resid).max() <= 1e-13 * max(np.abs(rhs).max(), 1e-30):
                    break
                sol += lu_solve(self._lu, resid)
            else:
                self._lu = lu_factor(a_mat)
                sol = lu_solve(self._lu, rhs)
        n = self.grid.n
        v1, v2 = sol[:n] / sw, sol[n:] / sw
        integrand = self.abs_half[1][0] * v1 + self.abs_half[1][1] * v2
        return float(np.sum(self.w * integrand))

    def z_solve(self, alpha: float):
        """Solve (1 + (p-3) N_alpha P_p) Z = e_2 for Z = (Z1, Z2)."""
        p = self.p
        n1, n2 = self.n_alpha_entries(alpha)
        n = self.grid.n
        corr = self.grid.dx ** 2 / 12.0
        blocks = [[None, None], [None, None]]
        for a in range(2):
            kern = n1 if a == 0 else n2
            for b in range(2):
                block = (p - 3.0) * kern * (self.pp[a][b] * self.w)[None, :]
                block[np.diag_indices(n)] -= (p - 3.0) * corr * self.pp[a][b]
                blocks[a][b] = block
        a_mat = np.block(blocks) + np.eye(2 * n)
        rhs = np.concatenate([np.zeros(n), np.ones(n)])
        sol = np.linalg.solve(a_mat, rhs)
        return sol[:n], sol[n:]


def alpha_fixed_point(p: float, grid: Grid | None = None,
                      tol: float = 1e-10, max_iter: int = 200):
    """Iterate alpha <- -(p-3)/2 * s(p, alpha) from alpha = 0.

    Returns (alpha, lambda, iterations) with lambda = 1 - alpha^2.
    """
    if abs(p - 3.0) > BS_RANGE + 1e-12:
        raise ModeRangeError(f"fixed point documented for |p-3| <= {BS_RANGE}, got p = {p}")
    if p == 3.0:
        return 0.0, 1.0, 0
    asm = BirmanSchwingerAssembly(p, grid)
    alpha = 0.0
    for it in range(1, max_iter + 1):
        alpha_next = -0.5 * (p - 3.0) * asm.s_value(alpha)
        if abs(alpha_next - alpha) <= tol:
            return float(alpha_next), float(1.0 - alpha_next ** 2), it
        alpha = alpha_next
    raise NoConvergence(f"alpha iteration did not reach {tol} in {max_iter} steps")


@dataclass(frozen=True)
class InternalMode:
    """Discrete eigenpair (i lambda, xi) of the linearization.

    The eigenfunction has the reality structure xi = (xi1, i y2) with xi1,
    y2 real, satisfying  L- y2 = lambda xi1  and  L+ xi1 = lambda y2  (at
    omega = 1; general omega by scaling).  Arrays are stored at omega = 1 on
    ``build_grid``; evaluation at other omega uses
    xi_omega(x) = omega^{1/4} xi(sqrt(omega) x).
    """

    params: Params
    lam: float
    alpha: float
    method: str
    normalization: str = "unset"
    build_grid: Grid | None = None
    xi1_base: np.ndarray | None = None
    y2_base: np.ndarray | None = None
    amplitude: float = 1.0

    @property
    def has_eigenfunction(self) -> bool:
        return self.xi1_base is not None

    def _splines(self):
        return (
            CubicSpline(self.build_grid.x, self.xi1_base, bc_type="natural"),
            CubicSpline(self.build_grid.x, self.y2_base, bc_type="natural"),
            CubicSpline(self.build_grid.x, derivative_values(self.xi1_base, self.build_grid, 1).real,
                        bc_type="natural"),
            CubicSpline(self.build_grid.x, derivative_values(self.y2_base, self.build_grid, 1).real,
                        bc_type="natural"),
        )

    def _scaled_eval(self, spline, x, omega):
        sw = np.sqrt(omega)
        xs = np.clip(sw * x, self.build_grid.x[0], self.build_grid.x[-1])
        return self.amplitude * omega ** 0.25 * spline(xs)

    def xi1_at(self, x: np.ndarray, omega: float | None = None) -> np.ndarray:
        omega = self.params.omega if omega is None else omega
        return self._scaled_eval(self._splines()[0], x, omega)

    def y2_at(self, x: np.ndarray, omega: float | None = None) -> np.ndarray:
        omega = self.params.omega if omega is None else omega
        return self._scaled_eval(self._splines()[1], x, omega)

    def xi1_on(self, grid: Grid) -> np.ndarray:
        return self.xi1_at(grid.x)

    def y2_on(self, grid: Grid) -> np.ndarray:
        return self.y2_at(grid.x)

    def omega_derivative_at(self, x: np.ndarray, omega: float | None = None):
        """d/domega of (xi1_omega, y2_omega): (v/4 + x v'/2) / omega."""
        omega = self.params.omega if omega is None else omega
        sp = self._splines()
        xi1 = self._scaled_eval(sp[0], x, omega)
        y2 = self._scaled_eval(sp[1], x, omega)
        sw = np.sqrt(omega)
        dxi1 = sw * self._scaled_eval(sp[2], x, omega)
        dy2 = sw * self._scaled_eval(sp[3], x, omega)
        return (
            (0.25 * xi1 + 0.5 * x * dxi1) / omega,
            (0.25 * y2 + 0.5 * x * dy2) / omega,
        )

    def omega_derivative_on(self, grid: Grid):
        return self.omega_derivative_at(grid.x)

    def field(self, grid: Grid) -> Field2:
        v = np.zeros((grid.n, 2), dtype=complex)
        v[:, 0] = self.xi1_on(grid)
        v[:, 1] = 1j * self.y2_on(grid)
        return Field2(grid, v)

    def pairing_integral(self) -> float:
        """int xi1 * Im(xi2) dx on the build grid (at omega = 1 scale)."""
        w = trapezoid_weights(self.build_grid)
        return float(self.amplitude ** 2 * np.sum(w * self.xi1_base * self.y2_base))

    def normalized(self, tag: str) -> "InternalMode":
        """Rescale: 'symplectic' makes int xi1 Im xi2 = 1/2, 'modulation' 1/4."""
        target = {"symplectic": 0.5, "modulation": 0.25}[tag]
        cur = self.pairing_integral()
        if cur <= 0:
            raise ValueError(f"pairing integral {cur:.3g} not positive; cannot rescale")
        scale = np.sqrt(target / cur)
        return replace(self, amplitude=self.amplitude * scale, normalization=tag)

    def eigen_residual(self, grid: Grid, margin: int = 8) -> float:
        """Relative L2 residual of  L xi = i lambda xi  on the grid interior."""
        from .operators import build_operator

        xi = self.field(grid)
        lv = build_operator(self.params, "matrix_L", grid).apply(xi)
        resid = lv.values - 1j * self.lam * xi.values
        w = trapezoid_weights(grid)
        sl = slice(margin, grid.n - margin)
        num = np.sqrt(np.sum(w[sl] * np.sum(np.abs(resid[sl]) ** 2, axis=1)))
        den = np.sqrt(np.sum(w[sl] * np.sum(np.abs(xi.values[sl]) ** 2, axis=1)))
        return float(num / den)


def resonance_mode_cubic(x: np.ndarray):
    """The p = 3 threshold-resonance pair xi_3 = (1 - phi_3^2, i)."""
    phi3sq = soliton_values(Params(3.0, 1.0), x) ** 2
    return 1.0 - phi3sq, np.ones_like(x)


def xi_build(p: float, mode: InternalMode, grid: Grid | None = None) -> InternalMode:
    """Populate the eigenfunction of ``mode`` by the Darboux chain.

    Solves (1 + (p-3) N_alpha P_p) Z = e_2 densely, sets w1 = Z1 + Z2 and

        xi1 = w1'' + 2 (phi'/phi) w1' + (phi''/phi) w1,   y2 = L+ xi1 / lambda,

    using the exact coefficients phi'/phi = -tanh((p-1)x/2) and
    phi''/phi = 1 - phi^{p-1} at omega = 1.  The construction is real, so no
    reality projection is needed; its p -> 3 limit is (1 - phi_3^2, 1).
    """
    grid = grid or mode.build_grid or make_grid(_DEFAULT_HALF_WIDTH, _DEFAULT_N, "collocation")
    x = grid.x
    if p == 3.0:
        xi1, y2 = resonance_mode_cubic(x)
    else:
        asm = BirmanSchwingerAssembly(p, grid)
        z1, z2 = asm.z_solve(mode.alpha)
        # project onto the even subspace (removes LU pivoting noise; the
        # exact solution is even)
        z1 = 0.5 * (z1 + z1[::-1])
        z2 = 0.5 * (z2 + z2[::-1])
        w1 = z1 + z2
        dw1 = derivative_values(w1, grid, 1).real
        d2w1 = derivative_values(w1, grid, 2).real
        pm = Params(p, 1.0)
        phi_pm1 = soliton_values(pm, x) ** (p - 1)
        log_deriv = -np.tanh((p - 1) * x / 2.0)
        xi1 = d2w1 + 2.0 * log_deriv * dw1 + (1.0 - phi_pm1) * w1
        lplus = -derivative_values(xi1, grid, 2).real + (1.0 - p * phi_pm1) * xi1
        y2 = lplus / mode.lam
    return replace(
        mode,
        build_grid=grid,
        xi1_base=xi1,
        y2_base=y2,
        amplitude=1.0,
        normalization="darboux_section10",
    )


def _evans_function(params: Params, beta: float) -> float:
    from .jost import evans_gap

    lam = params.omega - beta ** 2
    return evans_gap(params, lam, eps_gap=min(1e-3, 0.5 * beta ** 2 / params.omega))


def _evans_root(params: Params, beta_lo: float, beta_hi: float, f_lo=None, f_hi=None) -> float:
    f = lambda b: _evans_function(params, b)
    return float(brentq(f, beta_lo, beta_hi, xtol=1e-12, rtol=1e-14))


def _evans_lambda(p: float, omega: float, alpha_guess: float | None) -> float:
    params = Params(p, omega)
    sw = np.sqrt(omega)
    if alpha_guess is not None and alpha_guess > 0:
        center = alpha_guess * sw
        for widen in (1.25, 2.0, 4.0, 8.0):
            lo, hi = center / widen, min(center * widen, 0.995 * sw)
            flo, fhi = _evans_function(params, lo), _evans_function(params, hi)
            if flo * fhi < 0:
                beta = _evans_root(params, lo, hi)
                return omega - beta ** 2
        raise NoConvergence(f"no Evans sign change near alpha guess {alpha_guess:.3g}")
    betas = np.geomspace(0.03 * sw, 0.99 * sw, 24)
    vals = [_evans_function(params, b) for b in betas]
    for i in range(len(betas) - 1):
        if vals[i] * vals[i + 1] < 0:
            beta = _evans_root(params, betas[i], betas[i + 1])
            return omega - beta ** 2
    raise NoConvergence(f"no Evans root located for p = {p}, omega = {omega}")


@lru_cache(maxsize=64)
def _cached_alpha(p: float) -> tuple[float, float, int]:
    return alpha_fixed_point(p)


def find_lambda(p: float, method: str = "auto", omega: float = 1.0) -> InternalMode:
    """Locate the internal-mode eigenvalue; the eigenfunction comes later.

    ``method`` is ``birman_schwinger`` (|p-3| <= 0.3), ``evans``
    (practically |p-3| >= 0.05) or ``auto``.  For omega != 1 the
    Birman-Schwinger value is scaled by lambda(p, omega) = omega lambda(p, 1);
    the Evans search runs directly at the requested omega.
    """
    off = abs(p - 3.0)
    if method == "auto":
        method = "birman_schwinger" if off <= BS_RANGE else "evans"
    if method == "birman_schwinger":
        alpha, lam1, _ = _cached_alpha(p)
        return InternalMode(Params(p, omega), lam=omega * lam1, alpha=alpha,
                            method="birman_schwinger")
    if method == "evans":
        if off < EVANS_MIN_OFFSET:
            raise ModeRangeError(
                f"Evans search unreliable for |p-3| < {EVANS_MIN_OFFSET} (gap too thin)"
            )
        guess = _cached_alpha(p)[0] if off <= BS_RANGE else None
        lam = _evans_lambda(p, omega, guess)
        alpha = float(np.sqrt(max(1.0 - lam / omega, 0.0)))
        return InternalMode(Params(p, omega), lam=lam, alpha=alpha, method="evans")
    raise ValueError(f"unknown method {method!r}")


@lru_cache(maxsize=32)
def internal_mode(p: float, normalization: str = "darboux_section10",
                  half_width: float = _DEFAULT_HALF_WIDTH, n: int = _DEFAULT_N) -> InternalMode:
    """Convenience: eigenvalue (Birman-Schwinger) + eigenfunction, cached."""
    grid = make_grid(half_width, n, "collocation")
    mode = find_lambda(p, "birman_schwinger")
    mode = xi_build(p, mode, grid)
    if normalization != "darboux_section10":
        mode = mode.normalized(normalization)
    return mode


def xi_expansion_r1(grid: Grid) -> np.ndarray:
    """First-order coefficient of xi_{p,1} about p = 3."""
    x = grid.x
    pm = Params(3.0, 1.0)
    phi = soliton_values(pm, x)
    dphi = -np.tanh(x) * phi
    t = convolution_T(grid).values[:, 0].real
    tp = derivative_values(t, grid, 1).real
    return -x * phi * dphi - (3.0 - phi ** 2) * t / (4 * np.sqrt(2)) + np.tanh(x) * tp / (2 * np.sqrt(2))


def xi_expansion_r2(grid: Grid) -> np.ndarray:
    """First-order coefficient of Im xi_{p,2} about p = 3."""
    x = grid.x
    phi = soliton_values(Params(3.0, 1.0), x)
    t = convolution_T(grid).values[:, 0].real
    tp = derivative_values(t, grid, 1).real
    return phi ** 2 / 2.0 + 3.0 * t / (4 * np.sqrt(2)) - np.tanh(x) * tp / (2 * np.sqrt(2))
