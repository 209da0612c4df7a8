"""Command-line front end: CSV/JSON emission for every computation.

Subcommands: profile, spectrum, fgr, resolvent, scan, evolve, moments,
selftest.  Every output starts with a '# '-prefixed JSON metadata line
(version, config echo, grid, tolerances); rows carry the residual or
tolerance that produced them.  Outputs are deterministic for a fixed
configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .numerics import make_grid, Field2
from .profiles import Params, mass_energy, soliton, soliton_values

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

_FLOAT_FMT = "%.12g"


def _fmt(v) -> str:
    if isinstance(v, float):
        return _FLOAT_FMT % v
    if isinstance(v, complex):
        return f"{_FLOAT_FMT % v.real}{'+' if v.imag >= 0 else '-'}{_FLOAT_FMT % abs(v.imag)}j"
    return str(v)


def _emit(out_path, meta: dict, header: list, rows: list) -> None:
    buf = []
    buf.append("# " + json.dumps({"tool": "nlslab", "version": __version__, **meta},
                                 sort_keys=True))
    text_rows = [header] + [[_fmt(v) for v in row] for row in rows]
    import io

    sio = io.StringIO()
    writer = csv.writer(sio, lineterminator="\n")
    for row in text_rows:
        writer.writerow(row)
    payload = "\n".join(buf) + "\n" + sio.getvalue()
    if out_path is None or out_path == "-":
        sys.stdout.write(payload)
    else:
        with open(out_path, "w") as fh:
            fh.write(payload)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NLSLAB_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_profile(args) -> int:
    params = Params(args.p, args.omega)
    grid = make_grid(args.half_width, args.n, "collocation")
    phi = soliton(params, grid)
    q, e = mass_energy(params, phi)
    from .numerics import derivative_values

    vals = phi.values[:, 0].real
    d2 = derivative_values(vals, grid, 2).real
    resid = float(np.abs(-d2 + params.omega * vals - vals ** params.p)[8:-8].max())
    amp = float(soliton_values(params, np.array([0.0]))[0])
    rows = [[args.p, args.omega, amp, q, e, resid]]
    meta = {
        "command": "profile",
        "grid": {"half_width": args.half_width, "n": args.n},
        "tolerances": {"stationary_residual_sup": 1e-5},
    }
    _emit(args.out, meta, ["p", "omega", "amplitude", "mass_Q", "energy_E",
                           "stationary_residual"], rows)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .modes import find_lambda, internal_mode, BS_RANGE, EVANS_MIN_OFFSET

    rows = []
    for p in args.p:
        off = abs(p - 3.0)
        lam_bs = lam_ev = float("nan")
        alpha = float("nan")
        if off <= BS_RANGE:
            m = find_lambda(p, "birman_schwinger")
            lam_bs, alpha = m.lam, m.alpha
        if off >= EVANS_MIN_OFFSET:
            lam_ev = find_lambda(p, "evans").lam
        resid = float("nan")
        if off <= BS_RANGE:
            mode = internal_mode(p)
            resid = mode.eigen_residual(mode.build_grid)
        diff = abs(lam_bs - lam_ev) if np.isfinite(lam_bs) and np.isfinite(lam_ev) else float("nan")
        rows.append([p, lam_bs, lam_ev, diff, alpha, resid])
    meta = {"command": "spectrum",
            "tolerances": {"cross_method": 1e-4, "eigen_residual": 1e-4}}
    _emit(args.out, meta, ["p", "lambda_birman_schwinger", "lambda_evans",
                           "method_difference", "alpha", "eigen_residual"], rows)
    return EXIT_OK


def cmd_fgr(args) -> int:
    from .fgr import gamma, gamma_linear_coefficient, radiation_mode
    from .modes import internal_mode

    rows = []
    gamma1 = gamma_linear_coefficient()
    for p in args.p:
        mode = internal_mode(p)
        rad = radiation_mode(p, mode)
        g = gamma(p, mode, rad)
        rows.append([p, mode.lam, g, g / (p - 3.0) if p != 3.0 else float("nan"),
                     gamma1, rad.eigen_residual()])
    meta = {"command": "fgr",
            "conventions": {"mode": "darboux_section10", "radiation_tail_amplitude": 1.0},
            "tolerances": {"radiation_residual": 1e-4}}
    _emit(args.out, meta, ["p", "lambda", "gamma", "gamma_over_pm3",
                           "gamma_linear_coefficient", "radiation_residual"], rows)
    return EXIT_OK


def cmd_resolvent(args) -> int:
    from .jost import resolvent_scan, wronskian_D

    params = Params(args.p, 1.0)
    rows = []
    for e in args.energies:
        ratio, _, _ = resolvent_scan(params, e, half=args.half, step=args.step)
        k = float(np.sqrt(abs(e) - 1.0))
        wd = wronskian_D(params, k)
        rows.append([args.p, e, wd.detD.real, wd.detD.imag, ratio,
                     wd.constancy_defect])
    meta = {"command": "resolvent",
            "grid": {"half": args.half, "step": args.step},
            "tolerances": {"wronskian_constancy": 1e-6}}
    _emit(args.out, meta, ["p", "E", "detD_re", "detD_im", "weight_ratio_max",
                           "wronskian_constancy"], rows)
    return EXIT_OK


def _scan_row(p: float):
    from .fgr import gamma, gamma_linear_coefficient, radiation_mode
    from .jost import resonance_wronskian, wronskian_D
    from .modes import BS_RANGE, find_lambda, internal_mode

    note = ""
    try:
        lam = find_lambda(p, "auto").lam
        g = float("nan")
        gamma_ok = 0
        if abs(p - 3.0) <= BS_RANGE:
            mode = internal_mode(p)
            rad = radiation_mode(p, mode)
            g = gamma(p, mode, rad)
            linear = gamma_linear_coefficient() * (p - 3.0)
            gamma_ok = int(abs(g) >= 0.5 * abs(linear)) if p != 3.0 else int(abs(g) > 1e-4)
        else:
            note = "gamma outside perturbative window"
        wiii = resonance_wronskian(Params(p, 1.0))
        d0 = wronskian_D(Params(p, 1.0), 0.0).detD
        return [p, lam, int(2 * lam > 1.0), 2 * lam - 1.0, g, gamma_ok,
                abs(wiii), abs(d0), note]
    except Exception as exc:  # recorded, scan continues
        return [p, float("nan"), 0, float("nan"), float("nan"), 0,
                float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"]


def scan_conditions(p_values) -> list:
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as tp:
            rows = list(tp.map(_scan_row, p_values))
    else:
        rows = [_scan_row(p) for p in p_values]
    rows.sort(key=lambda r: r[0])
    return rows


def cmd_scan(args) -> int:
    ps = [float(v) for v in np.linspace(args.p_min, args.p_max, args.steps)]
    if args.exclude_cubic:
        ps = [p for p in ps if abs(p - 3.0) > 1e-9]
    rows = scan_conditions(ps)
    meta = {"command": "scan",
            "range": {"p_min": args.p_min, "p_max": args.p_max, "steps": args.steps},
            "conditions": ["2*lambda > 1", "gamma != 0 (>= half linear prediction)",
                           "|W[f3, g3]| > 0"],
            "tolerances": {"lambda": 1e-4}}
    _emit(args.out, meta,
          ["p", "lambda", "two_lambda_gt_1", "two_lambda_margin", "gamma",
           "gamma_nonzero", "wronskian_iii", "detD0", "error"], rows)
    return EXIT_OK


def cmd_evolve(args) -> int:
    from .dynamics import SimConfig, run_stability_experiment
    from .fgr import radiation_mode
    from .modes import internal_mode

    params = Params(args.p, args.omega)
    grid = make_grid(args.half_width, args.n, "periodic")
    cfg = SimConfig(params=params, grid=grid, dt=args.dt, t_final=args.t_final,
                    stride=args.stride, delta=args.delta,
                    direction=args.direction, seed=args.seed)
    mode = internal_mode(args.p, half_width=args.half_width,
                         n=max(1024, args.n // 4))
    rad = radiation_mode(args.p, mode)
    traj = run_stability_experiment(cfg, mode, rad=rad)
    with open(args.out or "trajectory.csv", "w", newline="") as fh:
        traj.to_csv(fh)
    summary_path = (args.out or "trajectory.csv") + ".summary.json"
    with open(summary_path, "w") as fh:
        json.dump({"config": {"p": args.p, "omega0": args.omega,
                              "half_width": args.half_width, "n": args.n,
                              "dt": args.dt, "t_final": args.t_final,
                              "delta": args.delta, "seed": args.seed},
                   "summary": traj.summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_moments(args) -> int:
    from .fgr import MOMENT_FAMILIES, moment, moment_identity_residuals

    if args.check:
        res = moment_identity_residuals()
        worst = max(res.values())
        rows = [[fam, k, moment(fam, k, "quadrature"), moment(fam, k, "recursion"), r]
                for (fam, k), r in sorted(res.items())]
        meta = {"command": "moments", "mode": "check",
                "tolerances": {"identity_abs": 1e-6}}
        _emit(args.out, meta, ["family", "k", "quadrature", "recursion",
                               "abs_gap"], rows)
        return EXIT_OK if worst <= 1e-6 else EXIT_DOMAIN
    rows = []
    fams = [args.family] if args.family else list(MOMENT_FAMILIES)
    for fam in fams:
        for k in args.k:
            rows.append([fam, k, moment(fam, k, args.method)])
    meta = {"command": "moments", "method": args.method}
    _emit(args.out, meta, ["family", "k", "value"], rows)
    return EXIT_OK


def cmd_selftest(args) -> int:
    """Quick identity suite; exit 0 iff everything is within tolerance."""
    from .fgr import gamma_linear_coefficient, moment_identity_residuals
    from .jost import jost_solve, cubic_jost_oscillatory
    from .numerics import make_grid as mg
    from .operators import conjugation_check, ladder_identity_residual

    checks = []
    grid = mg(40.0, 4096, "collocation")
    x = grid.x
    gauss = Field2.from_scalar(grid, np.exp(-x ** 2 / 4.0))
    for p in (2.8, 3.0, 3.2):
        params = Params(p, 1.0)
        checks.append(("conjugation p=%.1f" % p,
                       conjugation_check(params, grid, gauss), 1e-6))
        r1, r2 = ladder_identity_residual(params, grid, gauss)
        checks.append(("ladder L1=S1*S1 p=%.1f" % p, r1, 1e-5))
        checks.append(("ladder chain p=%.1f" % p, r2, 1e-5))
    res = moment_identity_residuals(ks=(1, 3))
    checks.append(("moment identities", max(res.values()), 1e-6))
    checks.append(("gamma linear coefficient",
                   abs(gamma_linear_coefficient() - np.pi / (np.sqrt(2) * np.cosh(np.pi / 2))),
                   1e-6))
    f1 = jost_solve(Params(3.0, 1.0), 1.0, 1)
    mask = np.abs(f1.x) <= 10
    ref, _ = cubic_jost_oscillatory(1.0, f1.x[mask])
    checks.append(("p=3 jost closed form",
                   float(np.abs(f1.u[mask] - ref / (1 - 1j) ** 2).max()), 1e-6))
    ok = True
    for name, val, tol in checks:
        status = "pass" if val <= tol else "FAIL"
        ok = ok and val <= tol
        print(f"{status}  {name}: {val:.3e} (tol {tol:g})")
    return EXIT_OK if ok else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# parser


def _add_common(sp):
    sp.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlslab",
                                 description="numerical laboratory for 1D NLS solitons")
    ap.add_argument("--config", default=None,
                    help="JSON file whose keys mirror the subcommand flags")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profile", help="soliton profile and invariants")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--omega", type=float, default=1.0)
    sp.add_argument("--half-width", type=float, default=40.0)
    sp.add_argument("--n", type=int, default=4096)
    _add_common(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("spectrum", help="internal-mode eigenvalue by both methods")
    sp.add_argument("--p", type=float, nargs="+", required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("fgr", help="coupling constant gamma")
    sp.add_argument("--p", type=float, nargs="+", required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_fgr)

    sp = sub.add_parser("resolvent", help="weighted resolvent-kernel scan")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--energies", type=float, nargs="+",
                    default=[1.01, 1.1, 1.5, 2.0, 5.0])
    sp.add_argument("--half", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=0.5)
    _add_common(sp)
    sp.set_defaults(func=cmd_resolvent)

    sp = sub.add_parser("scan", help="stability-condition scan over p")
    sp.add_argument("--p-min", type=float, required=True)
    sp.add_argument("--p-max", type=float, required=True)
    sp.add_argument("--steps", type=int, default=8)
    sp.add_argument("--exclude-cubic", action="store_true",
                    help="drop p = 3 from the sample points")
    _add_common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("evolve", help="modulated stability experiment")
    sp.add_argument("--p", type=float, default=2.9)
    sp.add_argument("--omega", type=float, default=1.0)
    sp.add_argument("--half-width", type=float, default=60.0)
    sp.add_argument("--n", type=int, default=8192)
    sp.add_argument("--dt", type=float, default=2e-3)
    sp.add_argument("--t-final", type=float, default=200.0)
    sp.add_argument("--stride", type=int, default=250)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--direction", choices=["internal_mode", "random_even"],
                    default="internal_mode")
    sp.add_argument("--seed", type=int, default=0)
    _add_common(sp)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("moments", help="sech-power moment integrals")
    sp.add_argument("--check", action="store_true",
                    help="verify every integration-by-parts identity")
    sp.add_argument("--family", choices=list("pqrsabcdef"), default=None)
    sp.add_argument("--k", type=int, nargs="+", default=[1, 3, 5, 7, 9])
    sp.add_argument("--method", choices=["quadrature", "recursion"],
                    default="quadrature")
    _add_common(sp)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("selftest", help="fast structural-identity suite")
    _add_common(sp)
    sp.set_defaults(func=cmd_selftest)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args, unknown = ap.parse_known_args(argv)
        if unknown:
            ap.error(f"unrecognized arguments: {' '.join(unknown)}")
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.config:
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr):
                setattr(args, attr, value)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
