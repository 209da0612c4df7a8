"""Grids, two-component fields, quadrature, differentiation and ODE integration.

Shared substrate for every other module.  All functions are pure; grids and
fields are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "Grid",
    "Field2",
    "OdeProblem",
    "GridError",
    "GridMismatchError",
    "OdeFailure",
    "make_grid",
    "inner",
    "derivative",
    "integrate_ode",
    "trapezoid_weights",
]


class GridError(ValueError):
    """Invalid grid construction arguments."""


class GridMismatchError(ValueError):
    """Two fields do not live on the same grid."""


class OdeFailure(RuntimeError):
    """Adaptive integration failed (step underflow / blow-up).

    Attributes
    ----------
    abscissa : float
        Last abscissa reached before the failure.
    """

    def __init__(self, message: str, abscissa: float):
        super().__init__(f"{message} (at x = {abscissa:.6g})")
        self.abscissa = abscissa


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid, symmetric about 0.

    ``collocation`` grids include both endpoints (dx = 2*half_width/(n-1));
    ``periodic`` grids cover [-half_width, half_width - dx] with
    dx = 2*half_width/n and are meant for FFT-based operations.
    """

    half_width: float
    n: int
    kind: Literal["collocation", "periodic"]
    x: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def dx(self) -> float:
        if self.kind == "collocation":
            return 2.0 * self.half_width / (self.n - 1)
        return 2.0 * self.half_width / self.n

    def reflection_indices(self) -> np.ndarray:
        """Index map i -> j with x[j] = -x[i] (mod the period for FFT grids)."""
        if self.kind == "collocation":
            return np.arange(self.n)[::-1]
        idx = (-np.arange(self.n)) % self.n
        return idx

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.n == other.n
            and self.half_width == other.half_width
        )

    def __hash__(self):
        return hash((self.kind, self.n, self.half_width))


def make_grid(half_width: float, n: int, kind: str = "collocation") -> Grid:
    """Build a symmetric uniform grid.

    Parameters
    ----------
    half_width : float
        Domain is [-half_width, half_width].
    n : int
        Number of points, at least 16.
    kind : {"collocation", "periodic"}
    """
    if half_width <= 0:
        raise GridError(f"half_width must be positive, got {half_width}")
    if n < 16:
        raise GridError(f"need at least 16 points, got {n}")
    if kind not in ("collocation", "periodic"):
        raise GridError(f"unknown grid kind {kind!r}")
    if kind == "collocation":
        x = np.linspace(-half_width, half_width, n)
    else:
        dx = 2.0 * half_width / n
        x = -half_width + dx * np.arange(n)
    g = Grid(half_width=float(half_width), n=int(n), kind=kind)
    object.__setattr__(g, "x", x)
    return g


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Quadrature weights matching :func:`inner` (trapezoid / periodic mean)."""
    if grid.kind == "periodic":
        return np.full(grid.n, grid.dx)
    w = np.full(grid.n, grid.dx)
    w[0] = w[-1] = grid.dx / 2.0
    return w


@dataclass(frozen=True)
class Field2:
    """C^2-valued function sampled on a grid.

    ``values`` has shape (n, 2).  Scalar problems use the first component and
    keep the second one zero.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, 2):
            raise ValueError(f"values must have shape ({self.grid.n}, 2), got {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_scalar(cls, grid: Grid, values, second=None) -> "Field2":
        v = np.zeros((grid.n, 2), dtype=complex)
        v[:, 0] = np.asarray(values, dtype=complex)
        if second is not None:
            v[:, 1] = np.asarray(second, dtype=complex)
        return cls(grid, v)

    def evenness_defect(self) -> float:
        """max_i |v(x_i) - v(-x_i)| over both components."""
        idx = self.grid.reflection_indices()
        return float(np.abs(self.values - self.values[idx]).max())

    def is_even(self, rtol: float = 1e-10) -> bool:
        scale = float(np.abs(self.values).max())
        if scale == 0.0:
            return True
        return self.evenness_defect() <= rtol * scale

    def __add__(self, other: "Field2") -> "Field2":
        _check_same_grid(self, other)
        return Field2(self.grid, self.values + other.values)

    def __sub__(self, other: "Field2") -> "Field2":
        _check_same_grid(self, other)
        return Field2(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field2":
        return Field2(self.grid, self.values * c)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.sqrt(max(inner(self, self), 0.0)))


def _check_same_grid(u: Field2, v: Field2) -> None:
    if u.grid != v.grid:
        raise GridMismatchError("fields live on different grids")


def inner(u: Field2, v: Field2) -> float:
    """Real inner product  integral of Re(u1 conj(v1) + u2 conj(v2)) dx.

    Trapezoid rule on collocation grids, plain Riemann sum (exact trapezoid)
    on periodic grids.
    """
    _check_same_grid(u, v)
    w = trapezoid_weights(u.grid)
    integrand = np.real(np.sum(u.values * np.conj(v.values), axis=1))
    return float(np.sum(w * integrand))


# fourth-order finite-difference stencils; one-sided rows keep order 4
_D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_INTERIOR6 = np.array([1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90])
_D1_INTERIOR6 = np.array([-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60])
_D1_ONESIDED = np.array(
    [
        [-25.0 / 12, 4.0, -3.0, 4.0 / 3, -1.0 / 4, 0.0],
        [-1.0 / 4, -5.0 / 6, 3.0 / 2, -1.0 / 2, 1.0 / 12, 0.0],
    ]
)
_D2_ONESIDED = np.array(
    [
        [15.0 / 4, -77.0 / 6, 107.0 / 6, -13.0, 61.0 / 12, -5.0 / 6],
        [5.0 / 6, -5.0 / 4, -1.0 / 3, 7.0 / 6, -1.0 / 2, 1.0 / 12],
    ]
)


def uniform_fd(vals: np.ndarray, h: float, order: int, accuracy: int = 4) -> np.ndarray:
    """Finite differences on uniformly spaced samples (any 1D/2D array).

    Order-4 one-sided stencils at the boundary; ``accuracy=6`` switches the
    interior second-derivative stencil to order 6 (used by residual checks).
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    v = np.asarray(vals)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    n = v.shape[0]
    out = np.zeros_like(v, dtype=complex)
    if accuracy == 6:
        sten, half = (_D1_INTERIOR6 if order == 1 else _D2_INTERIOR6), 3
    else:
        sten, half = (_D1_INTERIOR if order == 1 else _D2_INTERIOR), 2
    acc = np.zeros_like(v[half : n - half], dtype=complex)
    width = len(sten)
    for j, c in enumerate(sten):
        if c != 0.0:
            acc = acc + c * v[j : n - width + 1 + j]
    out[half : n - half] = acc
    one = _D1_ONESIDED if order == 1 else _D2_ONESIDED
    cen = _D1_INTERIOR if order == 1 else _D2_INTERIOR
    sign = -1.0 if order == 1 else 1.0
    for row in range(half):
        if row < 2:
            out[row] = one[row] @ v[:6]
            out[n - 1 - row] = sign * (one[row] @ v[n - 6 :][::-1])
        else:
            out[row] = cen @ v[row - 2 : row + 3]
            out[n - 1 - row] = cen @ v[n - 3 - row : n + 2 - row]
    res = out / h ** order
    return res[:, 0] if squeeze else res


def _deriv_array(vals: np.ndarray, grid: Grid, order: int) -> np.ndarray:
    """Differentiate each column of ``vals`` (shape (n, m)) along the grid."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    n = grid.n
    h = grid.dx
    if grid.kind == "periodic":
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
        mult = (1j * k) if order == 1 else -(k ** 2)
        return np.fft.ifft(np.fft.fft(vals, axis=0) * mult[:, None], axis=0)
    return uniform_fd(vals, h, order)


def derivative(u: Field2, order: int = 1) -> Field2:
    """Spatial derivative of a field.

    Fourth-order central differences on collocation grids (one-sided at the
    boundary), spectral differentiation on periodic grids.
    """
    return Field2(u.grid, _deriv_array(u.values, u.grid, order))


def derivative_values(vals: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Array version of :func:`derivative` for (n,) or (n, m) data."""
    v = np.asarray(vals)
    if v.ndim == 1:
        return _deriv_array(v[:, None].astype(complex), grid, order)[:, 0]
    return _deriv_array(v.astype(complex), grid, order)


@dataclass(frozen=True)
class OdeProblem:
    """First-order complex ODE system y' = F(x, y).

    ``rhs`` maps (x, y) with y of shape (dimension,) complex to the same
    shape.  ``tolerance`` bounds the local error per step.
    """

    dimension: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def integrate_ode(
    problem: OdeProblem,
    y0: np.ndarray,
    x0: float,
    x1: float,
    dense: bool = False,
):
    """Integrate ``problem`` from x0 to x1 with an embedded RK4(5) pair.

    Complex states are flattened to real pairs internally.  Returns the state
    at x1, or (state, interpolant) when ``dense`` is set; the interpolant
    maps an abscissa to the complex state.
    """
    y0 = np.asarray(y0, dtype=complex)
    if y0.shape != (problem.dimension,):
        raise ValueError(f"y0 must have shape ({problem.dimension},)")

    def real_rhs(x, yr):
        y = yr[: problem.dimension] + 1j * yr[problem.dimension :]
        f = np.asarray(problem.rhs(x, y), dtype=complex)
        return np.concatenate([f.real, f.imag])

    yr0 = np.concatenate([y0.real, y0.imag])
    scale = max(float(np.abs(yr0).max()), 1.0)
    sol = solve_ivp(
        real_rhs,
        (x0, x1),
        yr0,
        method="RK45",
        rtol=problem.tolerance,
        atol=problem.tolerance * scale * 1e-3,
        dense_output=dense,
    )
    if not sol.success:
        raise OdeFailure(f"integration failed: {sol.message}", float(sol.t[-1]))
    yr = sol.y[:, -1]
    y = yr[: problem.dimension] + 1j * yr[problem.dimension :]
    if not dense:
        return y

    def interp(x):
        v = sol.sol(x)
        return v[: problem.dimension] + 1j * v[problem.dimension :]

    return y, interp
