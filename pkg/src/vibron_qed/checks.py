"""Composite cross-validation suite used by ``vibron-qed validate``."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from vibron_qed import analytic, diag, dyn, fock, gfun
from vibron_qed.model import DimensionlessModel


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def max_workers() -> int:
    raw = os.environ.get("VIBRON_QED_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def fan_out(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def check_oracle(model: DimensionlessModel, m: int, levels: int = 10, n_max: int = 120,
                 tol: float = 1e-6) -> CheckResult:
    eig = diag.eigen_decompose(fock.build_block(m, model, fock.PhononBasis(n_max)), model)
    res = gfun.find_lowest_roots(m, model, levels, eigen=eig, match_tol=max(tol, 1e-6))
    rep = diag.validate_roots(res, eig, tol=tol)
    detail = "; ".join(rep.lines()[:-1])
    ok = rep.passed and len(rep.matches) == levels and not res.flags
    return CheckResult(f"oracle equivalence m={m} ({levels} levels, n_max={n_max})", ok, detail)


def check_poles(model: DimensionlessModel, m: int, n_poles: int = 4, distance: float = 1e-7,
                threshold: float = 1e6) -> CheckResult:
    window = (-0.5, (n_poles - 0.5) * model.omega)
    poles = gfun.pole_locations(m, model, window)
    expected = [n * model.omega for n in range(n_poles)]
    exact = list(poles.offsets) == expected
    worst = math.inf
    for p in poles.offsets:
        for side in (-1, 1):
            worst = min(worst, abs(gfun.g_function(p + side * distance, m, model).value))
    ok = exact and worst > threshold
    return CheckResult(f"pole structure m={m}", ok,
                       f"poles at n*omega: {exact}; min |G| at {distance:g} from a pole = {worst:.3e}")


def check_hermitian(model: DimensionlessModel, m: int, n_max: int = 60) -> CheckResult:
    H = fock.build_block(m, model, fock.PhononBasis(n_max)).matrix
    dev = float(np.max(np.abs(H - H.T)))
    return CheckResult(f"hermiticity m={m}", dev <= 1e-13, f"max |H - H^T| = {dev:.3e}")


def check_truncation(model: DimensionlessModel, m: int, n_max: int = 60) -> CheckResult:
    eig = diag.eigen_decompose(fock.build_block(m, model, fock.PhononBasis(n_max)), model)
    return CheckResult(f"truncation doubling m={m}", eig.certificate <= 1e-8,
                       f"max shift of lowest 10 levels {n_max}->{2 * n_max} = {eig.certificate:.3e}")


def check_dynamics(model: DimensionlessModel, m: int) -> list[CheckResult]:
    grid = dyn.TimeGrid()
    res = dyn.evolve(m, model, grid=grid)
    spec = dyn.fourier_spectrum(res.P, grid)
    norm_dev = float(np.max(np.abs(res.norm - 1.0)))
    e_dev = float(np.max(np.abs(res.energy - res.energy[0])))
    e_scale = max(1.0, abs(float(res.energy[0])))
    pars = dyn.parseval_residual(res.P, spec)
    static = model.static_emitter()
    jc = dyn.evolve(m, static, basis=fock.PhononBasis(8), grid=grid)
    jc_err = float(np.max(np.abs(jc.P - np.cos(math.sqrt(m + 1) * model.g * grid.times) ** 2)))
    return [
        CheckResult(f"norm conservation m={m}", norm_dev <= 1e-9, f"max |norm - 1| = {norm_dev:.3e}"),
        CheckResult(f"energy conservation m={m}", e_dev <= 1e-9 * e_scale,
                    f"max |<H>(t) - <H>(0)| = {e_dev:.3e} (scale {e_scale:g})"),
        CheckResult(f"Parseval m={m}", pars <= 1e-6, f"relative mismatch = {pars:.3e}"),
        CheckResult(f"JC limit m={m}", jc_err <= 1e-9, f"max |P - cos^2(sqrt(m+1) g t)| = {jc_err:.3e}"),
    ]


def check_dressed(model: DimensionlessModel, m_max: int = 5, n_top: int = 5) -> list[CheckResult]:
    worst_e = 0.0
    for m in range(m_max + 1):
        vals = np.linalg.eigvalsh(fock.build_block(m, model.replace(eta=0.0), fock.PhononBasis(n_top + 2)).matrix)
        for n in range(n_top + 1):
            for b in (+1, -1):
                e = analytic.dressed_energy(m, n, b, model)
                worst_e = max(worst_e, float(np.min(np.abs(vals - e))))
    worst_mu = max(abs(analytic.transition_intensity(m, model, kerr=True)
                       - analytic.brute_force_intensity(m, model)) for m in range(4))
    return [
        CheckResult("dressed energies vs eta=0 eigenvalues", worst_e <= 1e-10, f"max diff = {worst_e:.3e}"),
        CheckResult("transition intensity vs brute force", worst_mu <= 1e-10, f"max diff = {worst_mu:.3e}"),
    ]


def run_all(model: DimensionlessModel, tol: float = 1e-6, sectors=(0, 1)) -> list[CheckResult]:
    def per_sector(m):
        out = [check_oracle(model, m, tol=tol), check_poles(model, m), check_hermitian(model, m),
               check_truncation(model, m)]
        out.extend(check_dynamics(model, m))
        return out

    results = []
    for chunk in fan_out(per_sector, sectors):
        results.extend(chunk)
    results.extend(check_dressed(model))
    return results
