"""Split-step evolution, modulation decomposition and trajectory diagnostics.

The field evolves under  i u_t + u_xx = -|u|^{p-1} u  on a periodic grid by
Strang splitting (exact nonlinear phase rotation + exact linear spectral
step).  Solutions near the soliton manifold are decomposed as

    u = e^{i theta} (phi[omega, z] + eta),
    phi[omega, z] = phi_omega + 2 Re(z) xi1 - 2i Im(z) Im(xi2),

with eta orthogonal to i phi, d_omega phi and d_{z_j} phi.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .modes import InternalMode
from .numerics import Field2, Grid, make_grid, trapezoid_weights
from .profiles import (
    Params,
    kappa_weight,
    soliton_values,
    soliton_omega_derivative,
)

__all__ = [
    "SimConfig",
    "ModulationState",
    "Diagnostics",
    "Trajectory",
    "BlowUpError",
    "OutsideTube",
    "evolve",
    "modulate",
    "diagnostics",
    "run_stability_experiment",
    "chi_bump",
    "virial_weight",
]

TRAJECTORY_COLUMNS = [
    "t", "theta", "omega", "z_re", "z_im", "abs_z2", "Q", "E",
    "eta_sigmaA", "eta_tilde", "virial_I", "J_FGR", "eta_h1_weighted",
]


class BlowUpError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"sup-norm doubled at t = {t:.4f}; aborting")
        self.t = t


class OutsideTube(RuntimeError):
    """Modulation Newton iteration diverged."""


@dataclass(frozen=True)
class SimConfig:
    params: Params
    grid: Grid
    dt: float
    t_final: float
    stride: int = 100
    diag_a_const: float = 27.0  # localization scale A of the virial/FGR cutoffs
    diag_b_const: float = 3.0
    weight_a: float = 0.2  # rate in the e^{-a<x>} window
    delta: float = 0.05
    direction: str = "internal_mode"
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.grid.kind != "periodic":
            raise ValueError("dynamics needs a periodic grid")
        a, b = self.diag_a_const, self.diag_b_const
        if not (a >= b * b >= b >= 1.0):
            raise ValueError(f"need A >= B^2 >= B >= 1, got A={a}, B={b}")


def chi_bump(x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Even cutoff: 1 on [-1, 1], 0 outside [-2, 2], x chi'(x) <= 0 (quintic ramp)."""
    t = np.clip(np.abs(x) / scale - 1.0, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)


def virial_weight(grid: Grid, a_const: float) -> tuple[np.ndarray, np.ndarray]:
    """zeta_A^2 and its odd antiderivative on the grid."""
    x = grid.x
    zeta2 = np.exp(-2.0 * (np.abs(x) / a_const) * (1.0 - chi_bump(x)))
    # odd cumulative integral from 0
    n = grid.n
    i0 = np.argmin(np.abs(x))
    phi = np.zeros(n)
    dx = grid.dx
    cums = np.concatenate([[0.0], np.cumsum(0.5 * (zeta2[i0:-1] + zeta2[i0 + 1:]) * dx)])
    phi[i0:] = cums
    cums_l = np.concatenate([[0.0], np.cumsum(0.5 * (zeta2[i0::-1][:-1] + zeta2[i0::-1][1:]) * dx)])
    phi[: i0 + 1] = -cums_l[::-1]
    return zeta2, phi


def evolve(config: SimConfig, u0: Field2, observer=None):
    """Strang split-step evolution; calls ``observer(step, t, u)`` every stride.

    Returns (t_final_reached, u_final, times, mass_series, energy_series)
    where the series are sampled at the stride points.
    """
    from .profiles import mass_energy

    grid = config.grid
    p = config.params.p
    u = u0.values[:, 0].astype(complex).copy()
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)
    dt = config.dt
    lin_full = np.exp(-1j * dt * kx ** 2)
    sup0 = np.abs(u).max()
    nsteps = int(round(config.t_final / dt))
    times, qs, es = [], [], []

    def record(step, t, uv):
        f = Field2.from_scalar(grid, uv)
        q, e = mass_energy(config.params, f)
        times.append(t)
        qs.append(q)
        es.append(e)
        if observer is not None:
            observer(step, t, f)

    record(0, 0.0, u)
    half_phase = 0.5 * dt
    for step in range(1, nsteps + 1):
        u = u * np.exp(1j * half_phase * np.abs(u) ** (p - 1))
        u = np.fft.ifft(np.fft.fft(u) * lin_full)
        u = u * np.exp(1j * half_phase * np.abs(u) ** (p - 1))
        if step % config.stride == 0 or step == nsteps:
            if np.abs(u).max() > 2.0 * sup0 + 1e-12:
                raise BlowUpError(step * dt)
            record(step, step * dt, u)
    return nsteps * dt, Field2.from_scalar(grid, u), np.array(times), np.array(qs), np.array(es)


@dataclass(frozen=True)
class ModulationState:
    t: float
    theta: float
    omega: float
    z: complex
    eta: Field2
    newton_residual: float
    orthogonality: np.ndarray = field(default=None, repr=False)


def modulate(params: Params, u: Field2, mode: InternalMode,
             guess: ModulationState | None = None, tol: float = 1e-10,
             max_iter: int = 50, t: float = 0.0) -> ModulationState:
    """Newton solve for (theta, omega, z) with eta orthogonal per the ansatz.

    The Jacobian uses the analytic derivatives of eta with respect to the
    parameters (Gauss-Newton form); a finite-difference Jacobian of the full
    conditions is used as a fallback when the iteration stalls.
    """
    grid = u.grid
    x = grid.x
    w = trapezoid_weights(grid)
    uv = u.values[:, 0]

    if guess is None:
        th, om, z1, z2 = 0.0, params.omega, 0.0, 0.0
    else:
        th, om, z1, z2 = guess.theta, guess.omega, guess.z.real, guess.z.imag

    def pair(a, b):
        return float(np.sum(w * np.real(a * np.conj(b))))

    def assemble(theta, omega, zz1, zz2):
        if not 0.1 * params.omega < omega < 10.0 * params.omega:
            raise OutsideTube(f"frequency iterate left the tube (omega = {omega:.3g})")
        pm = Params(params.p, omega)
        phi0 = soliton_values(pm, x)
        dphi0 = soliton_omega_derivative(pm, x)
        xi1 = mode.xi1_at(x, omega)
        y2 = mode.y2_at(x, omega)
        dxi1, dy2 = mode.omega_derivative_at(x, omega)
        phi = phi0 + 2.0 * zz1 * xi1 - 2.0j * zz2 * y2
        dphi_dom = dphi0 + 2.0 * zz1 * dxi1 - 2.0j * zz2 * dy2
        dz1 = 2.0 * xi1 + 0j
        dz2 = -2.0j * y2
        eta = np.exp(-1j * theta) * uv - phi
        vecs = (1j * phi, dphi_dom, dz1, dz2)
        f = np.array([pair(eta, v) for v in vecs])
        return eta, phi, dphi_dom, dz1, dz2, vecs, f

    params_vec = np.array([th, om, z1, z2])
    last_norm = np.inf
    stalls = 0
    for it in range(max_iter):
        eta, phi, dphi_dom, dz1, dz2, vecs, f = assemble(*params_vec)
        fn = np.abs(f).max()
        if fn <= tol:
            break
        if fn > 0.9 * last_norm:
            stalls += 1
        last_norm = fn
        detas = (-1j * np.exp(-1j * params_vec[0]) * uv, -dphi_dom, -dz1, -dz2)
        jac = np.array([[pair(d, v) for d in detas] for v in vecs])
        if stalls >= 3 or not np.isfinite(jac).all():
            # finite-difference Jacobian of the full conditions
            h = 1e-7
            jac = np.zeros((4, 4))
            for l in range(4):
                pv = params_vec.copy()
                pv[l] += h
                _, _, _, _, _, _, fp = assemble(*pv)
                pv[l] -= 2 * h
                _, _, _, _, _, _, fm = assemble(*pv)
                jac[:, l] = (fp - fm) / (2 * h)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise OutsideTube(f"singular modulation Jacobian: {exc}") from exc
        if not np.isfinite(step).all() or np.abs(step).max() > 10.0:
            raise OutsideTube(f"modulation Newton diverged (step {step})")
        params_vec = params_vec + step
    else:
        raise OutsideTube(f"no convergence in {max_iter} iterations (|F| = {fn:.2e})")

    eta, phi, *_ , vecs, f = assemble(*params_vec)
    eta_f = Field2.from_scalar(grid, eta)
    return ModulationState(
        t=t,
        theta=float(np.mod(params_vec[0], 2 * np.pi)),
        omega=float(params_vec[1]),
        z=complex(params_vec[2], params_vec[3]),
        eta=eta_f,
        newton_residual=float(np.abs(f).max()),
        orthogonality=f,
    )


def reconstruct(params: Params, state: ModulationState, mode: InternalMode,
                grid: Grid) -> Field2:
    """u = e^{i theta} (phi[omega, z] + eta)."""
    x = grid.x
    pm = Params(params.p, state.omega)
    phi0 = soliton_values(pm, x)
    xi1 = mode.xi1_at(x, state.omega)
    y2 = mode.y2_at(x, state.omega)
    phi = phi0 + 2.0 * state.z.real * xi1 - 2.0j * state.z.imag * y2
    vals = np.exp(1j * state.theta) * (phi + state.eta.values[:, 0])
    return Field2.from_scalar(grid, vals)


@dataclass(frozen=True)
class Diagnostics:
    Q: float
    E: float
    abs_z2: float
    omega: float
    eta_sigma_a: float
    eta_tilde: float
    virial_i: float
    j_fgr: float
    eta_h1_weighted: float


def diagnostics(state: ModulationState, config: SimConfig, mode: InternalMode,
                rad=None) -> Diagnostics:
    from .profiles import mass_energy
    from .numerics import derivative_values

    grid = state.eta.grid
    x = grid.x
    w = trapezoid_weights(grid)
    eta = state.eta.values[:, 0]
    deta = derivative_values(eta, grid, 1)
    a_const = config.diag_a_const

    u = reconstruct(config.params, state, mode, grid)
    q, e = mass_energy(config.params, u)

    sech_a = 1.0 / np.cosh(2.0 * x / a_const)
    eta_sigma = float(
        np.sqrt(np.sum(w * np.abs(sech_a * deta) ** 2))
        + np.sqrt(np.sum(w * np.abs(sech_a * eta) ** 2)) / a_const
    )
    kap = kappa_weight(config.params)
    sech_k = 1.0 / np.cosh(kap * config.params.omega * x)
    eta_tilde = float(np.sqrt(np.sum(w * np.abs(sech_k * eta) ** 2)))

    zeta2, phi_a = virial_weight(grid, a_const)
    s_a_eta = zeta2 * eta + 2.0 * phi_a * deta
    vir = 0.5 * float(np.sum(w * np.real(1j * eta * np.conj(s_a_eta))))

    jf = 0.0
    if rad is not None:
        om = state.omega
        sq = np.sqrt(om)
        from scipy.interpolate import CubicSpline

        xs = np.clip(sq * x, rad.grid.x[0], rad.grid.x[-1])
        g1 = CubicSpline(rad.grid.x, rad.g1)(xs)
        w2 = CubicSpline(rad.grid.x, rad.w2)(xs)
        chi_a = chi_bump(x, a_const)
        z2 = state.z ** 2
        jf = float(np.sum(w * chi_a * (
            2.0 * z2.real * g1 * eta.imag + 2.0 * z2.imag * w2 * eta.real
        )))

    wt = np.exp(-config.weight_a * np.sqrt(1.0 + x ** 2))
    h1w = float(np.sqrt(np.sum(w * (np.abs(wt * eta) ** 2 + np.abs(wt * deta) ** 2))))

    return Diagnostics(Q=q, E=e, abs_z2=abs(state.z) ** 2, omega=state.omega,
                       eta_sigma_a=eta_sigma, eta_tilde=eta_tilde, virial_i=vir,
                       j_fgr=jf, eta_h1_weighted=h1w)


@dataclass
class Trajectory:
    config: SimConfig
    rows: list
    summary: dict

    def to_csv(self, path_or_buf) -> None:
        meta = {
            "columns": TRAJECTORY_COLUMNS,
            "config": {
                "p": self.config.params.p,
                "omega0": self.config.params.omega,
                "half_width": self.config.grid.half_width,
                "n": self.config.grid.n,
                "dt": self.config.dt,
                "t_final": self.config.t_final,
                "stride": self.config.stride,
                "A": self.config.diag_a_const,
                "B": self.config.diag_b_const,
                "delta": self.config.delta,
                "direction": self.config.direction,
                "seed": self.config.seed,
            },
        }
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in self.rows:
                writer.writerow([f"{v:.12g}" for v in row])
        finally:
            if own:
                fh.close()

    def column(self, name: str) -> np.ndarray:
        idx = TRAJECTORY_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])


def _windowed_mean(vals: np.ndarray, lo_frac: float, hi_frac: float) -> float:
    n = len(vals)
    lo, hi = int(lo_frac * n), max(int(hi_frac * n), int(lo_frac * n) + 1)
    return float(np.mean(vals[lo:hi]))


def run_stability_experiment(config: SimConfig, mode: InternalMode, rad=None):
    """Evolve a mode-perturbed soliton, modulating and logging every stride.

    The initial datum is phi_{omega_0} + delta * v with v the internal-mode
    direction xi1 + i Im xi2 normalized to unit H^1 norm (or a seeded random
    even perturbation).  Returns a Trajectory whose summary reports the
    orbital-stability proxy sup_t ||eta||_{H^1}, the |z|^2 envelope decay,
    the frequency-settling statistic and the correlation between dJ_FGR/dt
    and |z|^4 (reported, not asserted).
    """
    from .numerics import derivative_values

    grid = config.grid
    x = grid.x
    params = config.params
    phi0 = soliton_values(params, x)

    if config.direction == "internal_mode":
        v = mode.xi1_at(x, params.omega) + 1j * mode.y2_at(x, params.omega)
    elif config.direction == "random_even":
        rng = np.random.default_rng(config.seed)
        coef = rng.normal(size=(6, 2))
        v = np.zeros_like(x, dtype=complex)
        for m in range(6):
            envelope = np.exp(-(x / (4.0 + m)) ** 2)
            v += (coef[m, 0] + 1j * coef[m, 1]) * envelope * np.cos(m * np.pi * x / grid.half_width)
    else:
        raise ValueError(f"unknown direction {config.direction!r}")
    dv = derivative_values(v, grid, 1)
    w = trapezoid_weights(grid)
    h1 = np.sqrt(np.sum(w * (np.abs(v) ** 2 + np.abs(dv) ** 2)))
    v = v / h1

    u0 = Field2.from_scalar(grid, phi0 + config.delta * v)

    rows = []
    eta_h1_list = []
    resid_list = []
    state_box = {"guess": None}
    lam = mode.lam
    wts = trapezoid_weights(grid)

    def observer(step, t, uf):
        guess = state_box["guess"]
        if guess is not None:
            dt_out = t - guess.t
            guess = ModulationState(
                t=t,
                theta=guess.theta + guess.omega * dt_out,
                omega=guess.omega,
                z=guess.z * np.exp(1j * lam * dt_out),
                eta=guess.eta,
                newton_residual=guess.newton_residual,
            )
        st = modulate(params, uf, mode, guess=guess, t=t)
        state_box["guess"] = st
        d = diagnostics(st, config, mode, rad)
        ev = st.eta.values[:, 0]
        dev = derivative_values(ev, grid, 1)
        eta_h1_list.append(float(np.sqrt(np.sum(wts * (np.abs(ev) ** 2 + np.abs(dev) ** 2)))))
        resid_list.append(st.newton_residual)
        rows.append([
            t, st.theta, st.omega, st.z.real, st.z.imag, d.abs_z2, d.Q, d.E,
            d.eta_sigma_a, d.eta_tilde, d.virial_i, d.j_fgr, d.eta_h1_weighted,
        ])

    evolve(config, u0, observer=observer)

    t_arr = np.array([r[0] for r in rows])
    z2 = np.array([r[5] for r in rows])
    om = np.array([r[2] for r in rows])
    jf = np.array([r[11] for r in rows])
    eta_h1 = np.array(eta_h1_list)
    q = np.array([r[6] for r in rows])
    en = np.array([r[7] for r in rows])

    half = len(t_arr) // 2
    var_first = float(np.sum(np.abs(np.diff(om[:half]))))
    var_second = float(np.sum(np.abs(np.diff(om[half:]))))
    djdt = np.gradient(jf, t_arr)
    z4 = z2 ** 2
    corr = float(np.corrcoef(djdt, z4)[0, 1]) if np.std(djdt) > 0 and np.std(z4) > 0 else 0.0

    summary = {
        "z2_initial_window": _windowed_mean(z2, 0.0, 0.1),
        "z2_final_window": _windowed_mean(z2, 0.9, 1.0),
        "z2_envelope_ratio": _windowed_mean(z2, 0.9, 1.0) / max(_windowed_mean(z2, 0.0, 0.1), 1e-300),
        "omega_variation_first_half": var_first,
        "omega_variation_second_half": var_second,
        "omega_drift": float(om[-1] - om[0]),
        "mass_drift_rel": float(abs(q[-1] - q[0]) / abs(q[0])),
        "energy_drift_rel": float(abs(en[-1] - en[0]) / max(abs(en[0]), 1e-300)),
        "fgr_correlation": corr,
        "sup_eta_h1": float(eta_h1.max()),
        "orbital_constant": float(eta_h1.max() / np.sqrt(config.delta)),
        "max_newton_residual": float(np.max(resid_list)),
        "delta": config.delta,
    }
    return Trajectory(config=config, rows=rows, summary=summary)
