import math

import numpy as np
import pytest
from scipy import linalg

from vibron_qed import dyn
from vibron_qed.diag import solve_sector
from vibron_qed.errors import DependencyError, NyquistError, ParameterError
from vibron_qed.fock import PhononBasis, bare_initial_state, build_block_original


def test_time_grid():
    g = dyn.TimeGrid(t_max=1.0, dt=0.25)
    assert g.count == 5
    assert np.allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ParameterError):
        dyn.TimeGrid(t_max=1.0, dt=0.0)
    with pytest.raises(ParameterError):
        dyn.TimeGrid(t_max=0.1, dt=1.0)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_static_limit_closed_form(deep, m):
    grid = dyn.TimeGrid(t_max=40.0, dt=0.01)
    res = dyn.evolve(m, deep.static_emitter(), basis=PhononBasis(6), grid=grid)
    assert np.max(np.abs(res.P - np.cos(math.sqrt(m + 1) * grid.times) ** 2)) <= 1e-9


@pytest.mark.parametrize("m", [0, 1])
def test_conservation(shallow, m):
    res = dyn.evolve(m, shallow)
    assert np.max(np.abs(res.norm - 1)) <= 1e-9
    assert np.max(np.abs(res.energy - res.energy[0])) <= 1e-9 * max(1.0, abs(res.energy[0]))
    assert np.all((res.P >= -1e-12) & (res.P <= 1 + 1e-12))
    assert res.P[0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("m", [0, 1])
def test_against_untransformed_frame(shallow, m):
    # independent route: bare |m+1,0,g> under the untransformed Hamiltonian
    basis = PhononBasis(80)
    H = build_block_original(m, shallow, basis).matrix
    psi0 = bare_initial_state(m, basis).astype(complex)
    grid = dyn.TimeGrid(t_max=30.0, dt=0.05)
    res = dyn.evolve(m, shallow, grid=grid)
    for t in (0.0, 1.3, 7.7, 18.4, 30.0):
        psi = linalg.expm(-1j * H * t) @ psi0
        P = float(np.sum(np.abs(psi[: basis.dim]) ** 2))
        i = int(round(t / grid.dt))
        assert res.P[i] == pytest.approx(P, abs=1e-9)


def test_nyquist_guard(deep):
    with pytest.raises(NyquistError, match="too coarse"):
        dyn.evolve(0, deep, grid=dyn.TimeGrid(dt=1.0))


def test_default_grid_respects_guard(deep, shallow):
    for model in (deep, shallow):
        for m in (0, 1):
            eig = solve_sector(m, model)
            psi = dyn.evolve(m, model, eig=eig, grid=dyn.TimeGrid(t_max=1.0))
            assert dyn.DEFAULT_DT <= math.pi / (10 * psi.omega_max)


def test_sector_mismatch(deep):
    eig = solve_sector(0, deep)
    with pytest.raises(DependencyError):
        dyn.evolve(1, deep, eig=eig)


def test_unconverged_eigensystem_refused(deep):
    eig = solve_sector(0, deep, n_max=3, auto=False)
    with pytest.raises(DependencyError, match="not converged"):
        dyn.evolve(0, deep, eig=eig)


def test_spectrum_of_known_signal():
    grid = dyn.TimeGrid()
    t = grid.times
    P = 0.5 + 0.3 * np.cos(2.3 * t) + 0.1 * np.cos(1.7 * t)
    spec = dyn.fourier_spectrum(P, grid)
    assert spec.dc == pytest.approx(0.5, abs=1e-3)
    peaks = dyn.find_peaks(spec)
    assert len(peaks) == 2
    assert peaks[0].frequency == pytest.approx(2.3, abs=0.1 * spec.resolution)
    assert peaks[1].frequency == pytest.approx(1.7, abs=0.1 * spec.resolution)
    assert peaks[0].height > peaks[1].height
    # peak of a cosine of amplitude a over duration T: a T / (2 sqrt(2 pi))
    assert peaks[0].height == pytest.approx(0.3 * grid.t_max / 2 / math.sqrt(2 * math.pi), rel=0.02)


def test_parseval():
    grid = dyn.TimeGrid(t_max=50.0, dt=0.01)
    rng_free = np.sin(0.37 * grid.times) ** 3 + 0.2
    spec = dyn.fourier_spectrum(rng_free, grid)
    assert dyn.parseval_residual(rng_free, spec) <= 1e-12


def test_spectrum_length_checked():
    with pytest.raises(ParameterError):
        dyn.fourier_spectrum(np.zeros(3), dyn.TimeGrid())


def test_flat_signal_has_no_peaks():
    grid = dyn.TimeGrid(t_max=10.0, dt=0.1)
    spec = dyn.fourier_spectrum(np.ones(grid.count), grid)
    assert dyn.find_peaks(spec) == []
    res = dyn.DynamicsResult(m=0, times=grid.times, P=np.ones(grid.count), norm=np.ones(grid.count),
                             energy=np.zeros(grid.count), omega_max=0.0)
    with pytest.raises(DependencyError):
        dyn.dominant_period(res)


def test_run_populates_spectrum(deep):
    res = dyn.run(0, deep)
    assert res.spectrum is not None and res.peaks
    assert dyn.dominant_period(res) == pytest.approx(math.pi, rel=0.01)
