import io

import numpy as np
import pytest

from nlslab.dynamics import (
    BlowUpError,
    ModulationState,
    OutsideTube,
    SimConfig,
    Trajectory,
    chi_bump,
    diagnostics,
    evolve,
    modulate,
    reconstruct,
    run_stability_experiment,
    virial_weight,
)
from nlslab.modes import internal_mode
from nlslab.numerics import Field2, make_grid, trapezoid_weights
from nlslab.profiles import Params, soliton_values


@pytest.fixture(scope="module")
def grid():
    return make_grid(60.0, 4096, "periodic")


@pytest.fixture(scope="module")
def mode(grid):
    return internal_mode(2.9, half_width=60.0, n=2048)


def soliton_field(params, grid):
    return Field2.from_scalar(grid, soliton_values(params, grid.x))


class TestEvolve:
    def test_mass_conserved_to_roundoff(self, grid):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=2.0, stride=500)
        _, _, _, qs, _ = evolve(cfg, soliton_field(params, grid))
        assert abs(qs[-1] - qs[0]) / qs[0] < 1e-10

    def test_energy_drift_and_second_order(self, grid):
        params = Params(2.9, 1.0)
        drift = {}
        for dt in (1e-3, 5e-4):
            cfg = SimConfig(params=params, grid=grid, dt=dt, t_final=2.0,
                            stride=int(round(0.5 / dt)))
            # perturbed initial state so the energy error is visible
            u0 = Field2.from_scalar(
                grid, soliton_values(params, grid.x) * (1 + 0.05 * np.exp(-grid.x ** 2 / 9)))
            _, _, _, _, es = evolve(cfg, u0)
            drift[dt] = abs(es[-1] - es[0]) / abs(es[0])
        assert drift[1e-3] < 1e-6
        assert drift[1e-3] / drift[5e-4] == pytest.approx(4.0, rel=0.5)

    def test_soliton_fidelity_long_run(self, grid):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=5e-4, t_final=50.0, stride=20000)
        u0 = soliton_field(params, grid)
        _, uf, _, _, _ = evolve(cfg, u0)
        phi = soliton_values(params, grid.x)
        th = np.angle(np.sum(uf.values[:, 0] * phi))
        diff = uf.values[:, 0] * np.exp(-1j * th) - phi
        w = trapezoid_weights(grid)
        err = np.sqrt(np.sum(w * np.abs(diff) ** 2))
        assert err < 1e-5

    def test_blowup_guard(self, grid):
        params = Params(4.0, 1.0)  # supercritical focusing blob
        cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=5.0, stride=10)
        u0 = Field2.from_scalar(grid, 3.0 * np.exp(-(grid.x / 2.0) ** 2))
        with pytest.raises(BlowUpError):
            evolve(cfg, u0)

    def test_config_validation(self, grid):
        params = Params(2.9, 1.0)
        with pytest.raises(ValueError):
            SimConfig(params=params, grid=grid, dt=-1.0, t_final=1.0)
        with pytest.raises(ValueError):
            SimConfig(params=params, grid=make_grid(40.0, 128, "collocation"),
                      dt=1e-3, t_final=1.0)
        with pytest.raises(ValueError):
            SimConfig(params=params, grid=grid, dt=1e-3, t_final=1.0,
                      diag_a_const=2.0, diag_b_const=3.0)

    def test_determinism(self, grid):
        params = Params(2.9, 1.0)
        outs = []
        for _ in range(2):
            cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=0.5, stride=100)
            _, uf, *_ = evolve(cfg, soliton_field(params, grid))
            outs.append(uf.values.copy())
        assert np.array_equal(outs[0], outs[1])


class TestModulate:
    def test_recovers_phase_and_frequency(self, grid, mode):
        params = Params(2.9, 1.0)
        u = Field2.from_scalar(grid, np.exp(0.7j) * soliton_values(Params(2.9, 1.1), grid.x))
        st = modulate(params, u, mode)
        assert st.theta == pytest.approx(0.7, abs=1e-8)
        assert st.omega == pytest.approx(1.1, abs=1e-8)
        assert abs(st.z) < 1e-8
        assert st.eta.l2_norm() < 1e-8

    def test_equivariance(self, grid, mode):
        params = Params(2.9, 1.0)
        base = soliton_values(params, grid.x) * (1 + 0.02 * np.exp(-grid.x ** 2 / 16))
        u = Field2.from_scalar(grid, base)
        st0 = modulate(params, u, mode)
        alpha = 0.31
        st1 = modulate(params, Field2.from_scalar(grid, np.exp(1j * alpha) * base), mode,
                       guess=st0)
        assert st1.theta == pytest.approx(st0.theta + alpha, abs=1e-8)
        assert st1.omega == pytest.approx(st0.omega, abs=1e-8)
        assert st1.z == pytest.approx(st0.z, abs=1e-8)
        assert np.abs(st1.eta.values - st0.eta.values).max() < 1e-8

    def test_mode_direction_amplitude(self, grid, mode):
        # phi + eps(xi1 + i Im xi2) carries z = eps (1 - i)/2 under the
        # identification phi~ = 2 Re(z) xi1 - 2i Im(z) Im(xi2); the direction
        # 2 eps xi1 gives real z = eps
        params = Params(2.9, 1.0)
        eps = 1e-3
        xi1 = mode.xi1_at(grid.x)
        y2 = mode.y2_at(grid.x)
        phi = soliton_values(params, grid.x)
        st = modulate(params, Field2.from_scalar(grid, phi + eps * (xi1 + 1j * y2)), mode)
        assert st.z == pytest.approx(eps * (1 - 1j) / 2, rel=5e-3)
        assert st.eta.l2_norm() < 1e-5
        st2 = modulate(params, Field2.from_scalar(grid, phi + 2 * eps * xi1), mode)
        assert st2.z == pytest.approx(eps, rel=5e-3)
        assert abs(st2.z.imag) < 1e-6

    def test_orthogonality_residuals(self, grid, mode):
        params = Params(2.9, 1.0)
        u = Field2.from_scalar(
            grid,
            np.exp(0.2j) * (soliton_values(params, grid.x)
                            + 0.03j * np.exp(-grid.x ** 2 / 25) * np.cos(grid.x)))
        st = modulate(params, u, mode)
        assert st.newton_residual <= 1e-10

    def test_reconstruction_roundtrip(self, grid, mode):
        params = Params(2.9, 1.0)
        u = Field2.from_scalar(
            grid, soliton_values(params, grid.x) + 0.02 * np.exp(-grid.x ** 2 / 30))
        st = modulate(params, u, mode)
        rec = reconstruct(params, st, mode, grid)
        assert np.abs(rec.values - u.values).max() < 1e-10

    def test_outside_tube(self, grid, mode):
        params = Params(2.9, 1.0)
        u = Field2.from_scalar(grid, 1e-3 * np.exp(-grid.x ** 2))
        with pytest.raises(OutsideTube):
            modulate(params, u, mode)


class TestDiagnostics:
    def test_chi_properties(self):
        x = np.linspace(-3, 3, 601)
        chi = chi_bump(x)
        assert np.all(chi[np.abs(x) <= 1.0] == 1.0)
        assert np.all(chi[np.abs(x) >= 2.0] == 0.0)
        dchi = np.gradient(chi, x)
        assert np.all(x * dchi <= 1e-10)

    def test_virial_weight_odd_antiderivative(self, grid):
        zeta2, phi_a = virial_weight(grid, 27.0)
        i0 = np.argmin(np.abs(grid.x))
        assert phi_a[i0] == 0.0
        refl = grid.reflection_indices()
        # skip the unpaired leftmost node of the periodic grid
        defect = np.abs(phi_a[1:] + phi_a[refl][1:]).max()
        assert defect < 1e-10 * np.abs(phi_a).max()
        assert np.all(zeta2 > 0) and zeta2.max() <= 1.0

    def test_real_eta_has_zero_virial(self, grid, mode):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=1.0)
        eta = Field2.from_scalar(grid, 0.01 * np.exp(-grid.x ** 2 / 16))
        st = ModulationState(t=0.0, theta=0.0, omega=1.0, z=0j, eta=eta,
                             newton_residual=0.0)
        d = diagnostics(st, cfg, mode)
        assert abs(d.virial_i) < 1e-10

    def test_zero_eta_zero_norms(self, grid, mode):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=1.0)
        eta = Field2.from_scalar(grid, np.zeros(grid.n))
        st = ModulationState(t=0.0, theta=0.0, omega=1.0, z=0j, eta=eta,
                             newton_residual=0.0)
        d = diagnostics(st, cfg, mode)
        assert d.eta_sigma_a == 0.0 and d.eta_tilde == 0.0
        assert d.virial_i == 0.0 and d.j_fgr == 0.0 and d.eta_h1_weighted == 0.0

    def test_tilde_norm_bounded_by_l2(self, grid, mode, rng):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=1e-3, t_final=1.0)
        vals = rng.normal(size=grid.n) * np.exp(-grid.x ** 2 / 100)
        eta = Field2.from_scalar(grid, vals)
        st = ModulationState(t=0.0, theta=0.0, omega=1.0, z=0j, eta=eta,
                             newton_residual=0.0)
        d = diagnostics(st, cfg, mode)
        assert d.eta_tilde <= eta.l2_norm() + 1e-12


class TestExperiment:
    def test_short_experiment_and_csv(self, grid, mode, tmp_path):
        params = Params(2.9, 1.0)
        cfg = SimConfig(params=params, grid=grid, dt=2e-3, t_final=3.0,
                        stride=250, delta=0.04)
        traj = run_stability_experiment(cfg, mode)
        assert traj.summary["mass_drift_rel"] < 1e-8
        assert traj.summary["max_newton_residual"] <= 1e-10
        assert traj.summary["sup_eta_h1"] < 10 * np.sqrt(cfg.delta)
        buf = io.StringIO()
        traj.to_csv(buf)
        text = buf.getvalue()
        assert text.startswith("# {")
        header = text.splitlines()[1]
        assert header.split(",")[:3] == ["t", "theta", "omega"]
        path = tmp_path / "traj.csv"
        traj.to_csv(str(path))
        assert path.read_text() == text
