"""Acceptance gate: one test per criterion (or sub-criterion), one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py``; the verdict lines are printed
even when output capture is on.
"""

import math
import time

import numpy as np
import pytest
from scipy import signal

from vibron_qed import analytic, checks, diag, dyn, fock, gfun
from vibron_qed.cli import main
from vibron_qed.model import derive_constants, reference_params, to_dimensionless


@pytest.fixture
def gate(capsys):
    def verdict(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
        assert ok, detail
    return verdict


def _model(omega_trap=1e9):
    return to_dimensionless(reference_params(omega_trap))


def _within(x, target, rel):
    return abs(x - target) <= rel * abs(target)


def test_c1_oracle_equivalence(gate):
    model = _model()
    start = time.perf_counter()
    worst, matched = 0.0, []
    for m in (0, 1):
        eig = diag.eigen_decompose(fock.build_block(m, model, fock.PhononBasis(120)), model)
        res = gfun.find_lowest_roots(m, model, 10, eigen=eig)
        rep = diag.validate_roots(res, eig, tol=1e-6)
        matched.append(len(rep.matches) if rep.passed and not res.flags else -1)
        worst = max(worst, rep.max_diff)
    elapsed = time.perf_counter() - start
    ok = matched == [10, 10] and worst <= 1e-6 and elapsed < 10.0
    gate("C1 oracle equivalence", ok,
         f"matched {matched} of 10 per sector, max |diff| {worst:.2e} (tol 1e-6), {elapsed:.2f} s (< 10 s)")


def test_c2_pole_structure(gate):
    model = _model()
    window = (-5.0, 35.0)
    details, ok = [], True
    for m in (0, 1):
        poles = gfun.pole_locations(m, model, window)
        expected = [n * model.omega + (m + 1) * model.omega_a for n in range(4)]
        exact = list(poles.absolute) == expected
        near = min(abs(gfun.g_function(p + s * 1e-7, m, model).value) for p in poles.offsets for s in (-1, 1))
        ok &= exact and near > 1e6
        details.append(f"m={m}: poles at n*w+(m+1)w_a exactly: {exact}, min |G| at 1e-7 = {near:.2e}")
    gate("C2 pole structure", ok, "; ".join(details))


def test_c3_exact_splitting(gate):
    model = _model()
    r0 = gfun.find_lowest_roots(0, model, 4).energies
    r1 = gfun.find_lowest_roots(1, model, 4).energies
    s0 = [hi - lo for _, lo, hi in gfun.root_doublets(r0, model)]
    d1 = analytic.rabi_splitting(1, model)
    gaps = [abs(d1 - (hi - lo)) for _, lo, hi in gfun.root_doublets(r1, model)]
    ok0 = len(s0) == 2 and all(_within(s, 1.99, 0.02) for s in s0)
    ok1 = len(gaps) == 2 and all(abs(g - 0.03) <= 0.02 for g in gaps)
    d0 = analytic.rabi_splitting(0, model)
    gate("C3 exact splitting", ok0 and ok1,
         f"m=0 sideband spacings {', '.join(f'{s:.4f}' for s in s0)} vs 1.99 (2%); "
         f"m=1 formula-vs-exact gaps {', '.join(f'{g:.4f}' for g in gaps)} vs 0.03 +- 0.02; "
         f"m=0 closed form {d0:.4f} (quoted 2.11, not asserted)")


@pytest.mark.parametrize("m,period", [(0, math.pi), (1, math.pi / math.sqrt(2))])
def test_c4_deep_trap_dynamics(gate, m, period):
    model = _model()
    start = time.perf_counter()
    res = dyn.run(m, model)
    elapsed = time.perf_counter() - start
    T = dyn.dominant_period(res)
    spec = res.spectrum
    f0 = res.peaks[0].frequency
    # tallest local maximum outside the main lobe
    idx, _ = signal.find_peaks(spec.magnitude)
    side = max((spec.magnitude[i] for i in idx if abs(spec.omega[i] - f0) > 0.3), default=0.0)
    ratio = side / res.peaks[0].height
    ok = len(res.peaks) == 1 and _within(T, period, 0.01) and ratio <= 0.05 and elapsed < 5.0
    gate(f"C4 deep-trap dynamics m={m}", ok,
         f"period {T:.5f} vs {period:.5f} ({abs(T / period - 1):.2%}, tol 1%), "
         f"{len(res.peaks)} dominant peak(s), largest secondary {ratio:.2%} (<= 5%), {elapsed:.2f} s (< 5 s)")


def _two_peaks(m, omega_trap):
    model = _model(omega_trap)
    res = dyn.run(m, model)
    pred = analytic.two_peak_frequencies(m, model)
    return sorted(p.frequency for p in res.peaks), sorted([pred.omega_minus, pred.omega_plus]), len(res.peaks)


def test_c5a_two_frequency_m0(gate):
    found, pred, count = _two_peaks(0, 2e8)
    quoted = [1.85, 2.15]
    ok = (count == 2 and all(_within(f, p, 0.10) for f, p in zip(found, quoted))
          and all(_within(f, p, 0.05) for f, p in zip(found, pred)))
    gate("C5a two-frequency m=0, w=2g", ok,
         f"{count} peaks at {found[0]:.4f}, {found[1]:.4f}; quoted {quoted} (10%); "
         f"prediction {pred[0]:.4f}, {pred[1]:.4f} (5%)")


def test_c5b_two_frequency_m1_prediction(gate):
    found, pred, count = _two_peaks(1, 2e8)
    ok = count == 2 and all(_within(f, p, 0.05) for f, p in zip(found, pred))
    gate("C5b two-frequency m=1, w=2g vs two-level prediction", ok,
         f"{count} peaks at {found[0]:.4f}, {found[1]:.4f}; prediction {pred[0]:.4f}, {pred[1]:.4f} (5%)")


def test_c5c_two_frequency_m1_quoted_values(gate):
    # The quoted (2.9 +- 0.23) g pair is not produced at w = 2g by either the
    # dynamics or the two-level prediction; see C5e for the trap frequency that does.
    found, pred, count = _two_peaks(1, 2e8)
    quoted = [2.67, 3.13]
    ok = count == 2 and all(_within(f, p, 0.10) for f, p in zip(found, quoted))
    gate("C5c two-frequency m=1, w=2g vs quoted values", ok,
         f"{count} peaks at {found[0]:.4f}, {found[1]:.4f}; quoted {quoted} (10%); "
         f"relative errors {', '.join(f'{abs(f / p - 1):.1%}' for f, p in zip(found, quoted))}")


def test_c5d_intensity(gate):
    model = _model(2e8)
    mu = analytic.transition_intensity(0, model)
    mu_kerr = analytic.transition_intensity(0, model, kerr=True)
    brute = analytic.brute_force_intensity(0, model)
    ok = _within(mu, 0.15, 0.10) and abs(mu_kerr - brute) <= 1e-10
    gate("C5d transition intensity", ok,
         f"mu = {mu:.4f} g vs quoted 0.15 g ({abs(mu / 0.15 - 1):.1%}, tol 10%); "
         f"with Kerr {mu_kerr:.6f}, brute-force matrix element {brute:.6f}")


def test_c5e_two_frequency_m1_at_three_g(gate):
    # supplementary: the quoted m=1 pair is reproduced with the trap at 3g
    found, pred, count = _two_peaks(1, 3e8)
    quoted = [2.67, 3.13]
    ok = (count == 2 and all(_within(f, p, 0.10) for f, p in zip(found, quoted))
          and all(_within(f, p, 0.05) for f, p in zip(found, pred)))
    gate("C5e two-frequency m=1, w=3g (supplementary)", ok,
         f"{count} peaks at {found[0]:.4f}, {found[1]:.4f}; quoted {quoted} (10%); "
         f"prediction {pred[0]:.4f}, {pred[1]:.4f} (5%)")


def test_c6_derived_constants(gate):
    p = reference_params()
    d = derive_constants(p)
    chi, eta = d.chi / p.g, d.eta / p.g
    ok = 0.045 <= chi <= 0.055 and 0.70 <= eta <= 0.74
    gate("C6 derived constants", ok, f"chi/g = {chi:.5f} in [0.045, 0.055]; eta/g = {eta:.5f} in [0.70, 0.74]")


def test_c7_property_suites(gate, tmp_path, monkeypatch):
    model = _model()
    results = []
    for m in (0, 1):
        results += [checks.check_hermitian(model, m), checks.check_truncation(model, m)]
        results += checks.check_dynamics(model, m)
    basis = fock.PhononBasis(60)
    k = basis.n_max - 5
    unit = max(np.max(np.abs((D.conj().T @ D)[:k, :k] - np.eye(k)))
               for D in (fock.displacement_matrix(t, basis, warn=False).matrix for t in np.linspace(-1, 1, 21)))
    results.append(checks.CheckResult("displacement unitarity", unit <= 1e-10, f"{unit:.2e}"))
    monkeypatch.setenv("VIBRON_QED_THREADS", "2")
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["spectrum", "--levels", "6", "--out", str(out)]) == 0
        assert main(["dynamics", "--out", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    results.append(checks.CheckResult("byte-identical reruns", runs[0] == runs[1], f"{len(runs[0])} files"))
    failed = [r.name for r in results if not r.passed]
    gate("C7 property suites", not failed,
         "; ".join(f"{r.name}: {r.detail}" for r in results) + (f"; failed: {failed}" if failed else ""))


def test_c8_dressed_state_analytics(gate):
    model = _model()
    res = checks.check_dressed(model, m_max=5, n_top=5)
    gate("C8 dressed-state analytics", all(r.passed for r in res), "; ".join(f"{r.name}: {r.detail}" for r in res))
