"""Command-line front end: one subcommand per data product plus ``validate``.

All energies on the command line and in output files are in units of hbar g;
``--emin/--emax`` are offsets from the sector reference ``(m+1) omega_a``.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from vibron_qed import analytic, checks, diag, dyn, fock, gfun
from vibron_qed.errors import (ConvergenceError, DependencyError, ParameterError,
                               PoleProximityError)
from vibron_qed.model import (HBAR, ModelParams, derive_constants, load_config, reference_params,
                              params_from_mapping, to_dimensionless)
from vibron_qed.output import atomic_write_text, write_csv, write_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DEFAULT_NMAX = 120
DEFAULT_LEVELS = 10
DEFAULT_POINTS = 2001
DEFAULT_WINDOW = (-5.0, 35.0)


class UsageError(Exception):
    pass


def _reference_mapping() -> dict:
    p = reference_params()
    return {"mass_kg": p.M, "omega_emitter": p.Omega, "omega_cavity": p.omega_a,
            "omega_trap": p.omega, "wavevector": p.k, "coupling_g": p.g}


def resolve_params(args) -> ModelParams:
    """Config file (or the built-in reference set), then flag overrides."""
    if args.config:
        values = load_config(args.config)
        source = str(args.config)
    else:
        values = _reference_mapping()
        source = "<defaults>"
    if args.omega_trap is not None:
        values = dict(values, omega_trap=args.omega_trap)
    return params_from_mapping(values, source)


def _window(args):
    if args.emin is None and args.emax is None:
        return None
    lo = DEFAULT_WINDOW[0] if args.emin is None else args.emin
    hi = DEFAULT_WINDOW[1] if args.emax is None else args.emax
    if not hi > lo:
        raise UsageError(f"empty energy window: --emin {lo:g} must be below --emax {hi:g}")
    return lo, hi


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _sectors(args) -> list[int]:
    ms = sorted(set(args.m))
    if any(m < 0 for m in ms):
        raise UsageError(f"sector indices must be non-negative, got {args.m}")
    return ms


def cmd_params(args) -> int:
    p = resolve_params(args)
    d = derive_constants(p)
    dm = to_dimensionless(p, d)
    rows = [
        ("M [kg]", p.M, ""),
        ("Omega [rad/s]", p.Omega, ""),
        ("omega_a [rad/s]", p.omega_a, ""),
        ("omega (trap) [rad/s]", p.omega, ""),
        ("k [1/m]", p.k, ""),
        ("g [rad/s]", p.g, ""),
        ("hbar [J s]", HBAR, ""),
        ("alpha [m]", d.alpha, ""),
        ("k*alpha", d.lamb_dicke, ""),
        ("chi [rad/s]", d.chi, ""),
        ("eta [rad/s]", d.eta, ""),
        ("omega/g", dm.omega, ""),
        ("chi/g", dm.chi, "(quoted approx. 0.05)"),
        ("eta/g", dm.eta, f"(quoted approx. 1/sqrt(2) = {1 / math.sqrt(2):.4f})"),
        ("(Omega - omega_a)/g", dm.detuning, ""),
    ]
    width = max(len(r[0]) for r in rows)
    for label, value, note in rows:
        print(f"{label:<{width}}  {value:.10g}  {note}".rstrip())
    return EXIT_OK


def cmd_gscan(args) -> int:
    model = to_dimensionless(resolve_params(args))
    lo, hi = _window(args) or DEFAULT_WINDOW
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    out = _out(args)
    E = np.linspace(lo, hi, args.points)
    step = (hi - lo) / (args.points - 1)

    def scan(m):
        ref = model.sector_reference(m)
        with np.errstate(all="ignore"):
            val, _, _, _, conv = gfun.g_values(E, m, model, tol=args.tol or gfun.DEFAULT_TOL)
        dist = np.array([gfun.nearest_pole(e, model)[0] for e in E])
        near = dist < 0.5 * step
        val = np.where(conv, val, np.nan)
        write_csv(out / f"gscan_m{m}.csv", ["E_over_hg", "E_shift_over_hg", "G_value", "is_near_pole"],
                  ((ref + e, float(e), float(v), bool(n)) for e, v, n in zip(E, val, near)))
        poles = gfun.pole_locations(m, model, (lo, hi))
        write_csv(out / f"poles_m{m}.csv", ["m", "E_over_hg", "E_shift_over_hg"],
                  ((m, ref + p, p) for p in poles.offsets))
        roots = gfun.find_roots(m, model, window=(lo, hi)).energies
        return m, roots, len(poles), int(np.sum(~conv))

    for m, roots, npoles, bad in checks.fan_out(scan, _sectors(args)):
        msg = f"m={m}: {args.points} points, {npoles} poles, {len(roots)} roots"
        if bad:
            msg += f", {bad} points on a pole or not converged (written as nan)"
        print(msg)
        print("  roots [g, offset]: " + " ".join(f"{r:.6f}" for r in roots))
    print(f"wrote {out}")
    return EXIT_OK


def _spectrum_sector(m, model, args, window):
    if args.nmax is None:
        eig = diag.solve_sector(m, model, DEFAULT_NMAX, auto=True)
    else:
        eig = diag.eigen_decompose(fock.build_block(m, model, fock.PhononBasis(args.nmax)), model)
    tol = args.tol if args.tol is not None else 1e-6
    match_tol = max(tol, 1e-6)
    if window is None:
        res = gfun.find_lowest_roots(m, model, args.levels, eigen=eig, match_tol=match_tol)
    else:
        res = gfun.find_roots(m, model, window=window, eigen=eig, match_tol=match_tol)
    rep = diag.validate_roots(res, eig, tol=tol)
    return m, eig, res, rep


def cmd_spectrum(args) -> int:
    model = to_dimensionless(resolve_params(args))
    window = _window(args)
    out = _out(args)
    results = checks.fan_out(lambda m: _spectrum_sector(m, model, args, window), _sectors(args))
    lines = []
    passed = True
    for m, eig, res, rep in results:
        ref = model.sector_reference(m)
        rows = []
        for r in res.roots:
            oracle = r.oracle if r.oracle is not None else math.nan
            rows.append((m, r.interval_index, ref + r.energy, r.energy, r.residual,
                         ref + oracle, oracle, abs(r.energy - oracle)))
        write_csv(out / f"roots_m{m}.csv",
                  ["m", "interval_index", "E_over_hg", "E_shift_over_hg", "residual",
                   "oracle_E_over_hg", "oracle_shift_over_hg", "abs_diff"], rows)
        write_csv(out / f"eigenvalues_m{m}.csv", ["m", "index", "E_over_hg", "E_shift_over_hg", "converged_flag"],
                  ((m, j, ref + v, v, bool(ok)) for j, (v, ok) in
                   enumerate(zip(eig.eigenvalues, eig.converged_mask()))))
        lines.append(f"n_max={eig.n_max}, truncation certificate {eig.certificate:.3e}")
        lines.extend(rep.lines())
        lines.extend(f"  flag: {f}" for f in res.flags)
        delta = analytic.rabi_splitting(m, model)
        for n, lo_r, hi_r in gfun.root_doublets(res.energies, model):
            exact = hi_r - lo_r
            lines.append(f"  sideband n={n}: exact splitting {exact:.6f}, closed form {delta:.6f}, "
                         f"gap {abs(delta - exact):.4f}")
        passed &= rep.passed and not res.flags
    text = "\n".join(lines) + "\n"
    atomic_write_text(out / "spectrum_report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_dynamics(args) -> int:
    model = to_dimensionless(resolve_params(args))
    grid = dyn.TimeGrid(t_max=args.tmax, dt=args.dt)
    out = _out(args)

    def one(m):
        return dyn.run(m, model, grid=grid, n_max=args.nmax)

    for res in checks.fan_out(one, _sectors(args)):
        m = res.m
        write_csv(out / f"dynamics_m{m}.csv", ["t", "P", "norm"], zip(res.times, res.P, res.norm))
        write_csv(out / f"fft_m{m}.csv", ["omega0", "abs_f"], zip(res.spectrum.omega, res.spectrum.magnitude))
        pred = analytic.two_peak_frequencies(m, model) if model.detuning == 0 else None
        write_json(out / f"peaks_m{m}.json", {
            "m": m,
            "omega_trap_over_g": model.omega,
            "resolution": res.spectrum.resolution,
            "dc": res.spectrum.dc,
            "omega_max_relevant": res.omega_max,
            "peaks": [{"omega": p.frequency, "height": p.height, "prominence": p.prominence,
                       "interpolated": p.interpolated} for p in res.peaks],
            "prediction": None if pred is None else {"omega_plus": pred.omega_plus,
                                                     "omega_minus": pred.omega_minus, "mu": pred.mu},
        })
        desc = ", ".join(f"{p.frequency:.4f} (h={p.height:.4g})" for p in res.peaks[:4]) or "none"
        print(f"m={m}: peaks [g] {desc}")
        if res.peaks:
            print(f"  dominant period {dyn.dominant_period(res):.6f}/g")
        if pred is not None:
            print(f"  two-level prediction omega+ = {pred.omega_plus:.4f}, omega- = {pred.omega_minus:.4f}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    model = to_dimensionless(resolve_params(args))
    rows = analytic.report(model, _sectors(args))
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"{label:<{width}}  {value:.10g}")
    if args.out:
        write_csv(_out(args) / "analytic.csv", ["quantity", "value"], rows)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = to_dimensionless(resolve_params(args))
    tol = args.tol if args.tol is not None else 1e-6
    results = checks.run_all(model, tol=tol, sectors=_sectors(args))
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat YAML parameter file (SI units)")
    common.add_argument("--m", type=int, nargs="+", default=[0, 1], help="sector indices (default: 0 1)")
    common.add_argument("--omega-trap", type=float, help="trap frequency in rad/s (overrides config)")
    common.add_argument("--nmax", type=int, help="phonon truncation (default: auto from 120)")
    common.add_argument("--tmax", type=float, default=dyn.DEFAULT_T_MAX, help="evolution time in 1/g")
    common.add_argument("--dt", type=float, default=dyn.DEFAULT_DT, help="time step in 1/g")
    common.add_argument("--emin", type=float, help="window start, offset from (m+1) omega_a, in g")
    common.add_argument("--emax", type=float, help="window end, offset from (m+1) omega_a, in g")
    common.add_argument("--levels", type=int, default=DEFAULT_LEVELS, help="number of lowest roots")
    common.add_argument("--points", type=int, default=DEFAULT_POINTS, help="gscan grid size")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--tol", type=float, help="validation tolerance in g (default 1e-6)")

    parser = argparse.ArgumentParser(prog="vibron-qed",
                                     description="Exact spectrum and Rabi dynamics of a trapped emitter in a cavity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in [
        ("params", cmd_params, "print SI and dimensionless constants"),
        ("gscan", cmd_gscan, "tabulate G_m(E) over an energy window"),
        ("spectrum", cmd_spectrum, "find G-function roots and validate them against diagonalisation"),
        ("dynamics", cmd_dynamics, "Rabi dynamics, Fourier spectrum and peaks"),
        ("analytic", cmd_analytic, "closed-form dressed-state quantities"),
        ("validate", cmd_validate, "run the cross-validation suite"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.nmax is not None and args.nmax < 1:
        parser.error("--nmax must be at least 1")
    if args.levels < 1:
        parser.error("--levels must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, PoleProximityError, DependencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
