"""Rabi dynamics within a sector, its Fourier spectrum and peak extraction.

The observable is the population of the ``|m+1, n, g>`` branch summed over
phonons.  That projector commutes with the polaron transform and with the
b -> i b rotation, so it is evaluated directly on the rotated-frame state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from vibron_qed.diag import EigenSystem, solve_sector
from vibron_qed.errors import DependencyError, NyquistError, ParameterError
from vibron_qed.fock import PhononBasis, build_block, transformed_initial_state
from vibron_qed.model import DimensionlessModel

DEFAULT_T_MAX = 200.0 * math.pi
DEFAULT_DT = math.pi / 100.0
NYQUIST_FACTOR = 10.0
RELEVANT_WEIGHT = 1e-3
_CHUNK = 4096


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = DEFAULT_T_MAX
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not (self.dt > 0 and self.t_max > 0):
            raise ParameterError(f"t_max and dt must be positive, got t_max={self.t_max!r}, dt={self.dt!r}")
        if self.count < 2:
            raise ParameterError("time grid needs at least two samples")

    @property
    def count(self) -> int:
        return int(round(self.t_max / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.count)


@dataclass(frozen=True)
class Peak:
    frequency: float
    height: float
    prominence: float
    interpolated: bool = True


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    values: np.ndarray
    dc: float
    resolution: float
    dt: float
    n_samples: int

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass
class DynamicsResult:
    m: int
    times: np.ndarray
    P: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    omega_max: float
    spectrum: Spectrum | None = None
    peaks: list[Peak] = field(default_factory=list)


def transition_weights(eig: EigenSystem, psi0: np.ndarray, tol: float = 1e-14):
    """Eigen-components of the initial state and the amplitude of each P(t) frequency.

    P(t) = sum_jk W_jk exp(-i (E_j - E_k) t), W_jk = c_j c_k <v_j| Pg |v_k>.
    Returns (selected indices, coefficients, W restricted to them).
    """
    c = eig.eigenvectors.T @ psi0
    sel = np.nonzero(np.abs(c) > tol)[0]
    n_g = eig.n_max + 1
    Vg = eig.eigenvectors[:n_g, sel]
    W = np.outer(c[sel], c[sel]) * (Vg.T @ Vg)
    return sel, c, W


def relevant_max_frequency(eig: EigenSystem, psi0: np.ndarray, rel: float = RELEVANT_WEIGHT) -> float:
    """Fastest transition whose amplitude in P(t) is at least ``rel`` of the largest one."""
    sel, _, W = transition_weights(eig, psi0)
    E = eig.eigenvalues[sel]
    dE = np.abs(E[:, None] - E[None, :])
    A = np.abs(W)
    A[dE < 1e-12] = 0.0
    if not A.any():
        return 0.0
    return float(dE[A >= rel * A.max()].max())


def check_nyquist(grid: TimeGrid, omega_max: float) -> None:
    if omega_max > 0 and grid.dt > math.pi / (NYQUIST_FACTOR * omega_max):
        raise NyquistError(
            f"dt = {grid.dt:.6g}/g is too coarse: the fastest retained transition is "
            f"{omega_max:.6g} g, which requires dt <= pi / ({NYQUIST_FACTOR:g} * {omega_max:.6g}) "
            f"= {math.pi / (NYQUIST_FACTOR * omega_max):.6g}/g"
        )


def evolve(m: int, model: DimensionlessModel, basis: PhononBasis | None = None,
           grid: TimeGrid | None = None, eig: EigenSystem | None = None,
           psi0: np.ndarray | None = None, require_converged: bool = True) -> DynamicsResult:
    """Spectral propagation of the transformed initial state ``U |m+1, 0, g>``.

    ``psi(t) = sum_j exp(-i E_j t) <v_j|psi(0)> |v_j>`` on the sector block; the
    norm and the energy expectation are recomputed from the propagated vector
    at every sample.
    """
    grid = grid or TimeGrid()
    if eig is None:
        eig = solve_sector(m, model, basis.n_max if basis else 60, auto=basis is None)
    if eig.m != m:
        raise DependencyError(f"eigensystem is for sector {eig.m}, not {m}")
    if require_converged and eig.level_shifts is not None and not eig.converged:
        raise DependencyError(
            f"sector {m} eigensystem not converged at n_max={eig.n_max} "
            f"(certificate {eig.certificate:.2e})"
        )
    basis = PhononBasis(eig.n_max)
    if psi0 is None:
        psi0 = transformed_initial_state(m, basis, model)
    omega_max = relevant_max_frequency(eig, psi0)
    check_nyquist(grid, omega_max)

    H = build_block(m, model, basis).matrix
    sel, c, _ = transition_weights(eig, psi0)
    E = eig.eigenvalues[sel]
    V = eig.eigenvectors[:, sel]
    cs = c[sel]
    n_g = basis.dim
    t = grid.times
    P = np.empty(t.size)
    norm = np.empty(t.size)
    energy = np.empty(t.size)
    for start in range(0, t.size, _CHUNK):
        tt = t[start:start + _CHUNK]
        amps = np.exp(-1j * np.outer(tt, E)) * cs
        psi = amps @ V.T
        P[start:start + _CHUNK] = np.sum(np.abs(psi[:, :n_g]) ** 2, axis=1)
        norm[start:start + _CHUNK] = np.sqrt(np.sum(np.abs(psi) ** 2, axis=1))
        energy[start:start + _CHUNK] = np.real(np.sum(psi.conj() * (psi @ H), axis=1))
    return DynamicsResult(m=m, times=t, P=P, norm=norm, energy=energy, omega_max=omega_max)


def fourier_spectrum(P: np.ndarray, grid: TimeGrid, remove_dc: bool = True) -> Spectrum:
    """Rectangle-rule approximation of ``(2 pi)^-1/2 int_0^t_max P(t) exp(-i w t) dt``.

    One-sided (w >= 0).  The sample mean is removed first when ``remove_dc``;
    the removed value is recorded in ``Spectrum.dc``.
    """
    x = np.asarray(P, dtype=float)
    if x.size != grid.count:
        raise ParameterError(f"series has {x.size} samples, grid has {grid.count}")
    dc = float(x.mean()) if remove_dc else 0.0
    vals = grid.dt * np.fft.rfft(x - dc) / math.sqrt(2.0 * math.pi)
    omega = 2.0 * math.pi * np.fft.rfftfreq(x.size, grid.dt)
    return Spectrum(omega=omega, values=vals, dc=dc, resolution=2.0 * math.pi / (x.size * grid.dt),
                    dt=grid.dt, n_samples=x.size)


def parseval_residual(P: np.ndarray, spec: Spectrum) -> float:
    """Relative mismatch between sum |f|^2 dw (both signs of w) and int |P - dc|^2 dt."""
    x = np.asarray(P, dtype=float) - spec.dc
    time_power = spec.dt * float(np.sum(x * x))
    weights = np.full(spec.values.size, 2.0)
    weights[0] = 1.0
    if spec.n_samples % 2 == 0:
        weights[-1] = 1.0
    freq_power = spec.resolution * float(np.sum(weights * np.abs(spec.values) ** 2))
    return abs(freq_power - time_power) / time_power


def find_peaks(spec: Spectrum, min_prominence: float = 0.05) -> list[Peak]:
    """Local maxima of |f| whose prominence exceeds ``min_prominence`` times the global max.

    Each peak is refined by fitting a parabola through the three bins around it.
    Returned sorted by height, tallest first.
    """
    mag = spec.magnitude
    if mag.size < 3 or not np.any(mag > 0):
        return []
    top = float(mag.max())
    idx, props = signal.find_peaks(mag, prominence=min_prominence * top)
    peaks = []
    for k, prom in zip(idx, props["prominences"]):
        a, b, c = mag[k - 1], mag[k], mag[k + 1]
        denom = a - 2.0 * b + c
        if denom < 0:
            p = 0.5 * (a - c) / denom
            freq = spec.omega[k] + p * spec.resolution
            height = b - 0.25 * (a - c) * p
            peaks.append(Peak(float(freq), float(height), float(prom), True))
        else:
            peaks.append(Peak(float(spec.omega[k]), float(b), float(prom), False))
    peaks.sort(key=lambda pk: -pk.height)
    return peaks


def run(m: int, model: DimensionlessModel, grid: TimeGrid | None = None, n_max: int | None = None,
        min_prominence: float = 0.05) -> DynamicsResult:
    """evolve + fourier_spectrum + find_peaks."""
    grid = grid or TimeGrid()
    basis = PhononBasis(n_max) if n_max else None
    res = evolve(m, model, basis=basis, grid=grid)
    res.spectrum = fourier_spectrum(res.P, grid)
    res.peaks = find_peaks(res.spectrum, min_prominence)
    return res


def dominant_period(res: DynamicsResult) -> float:
    if not res.peaks:
        raise DependencyError("no spectral peak found")
    return 2.0 * math.pi / res.peaks[0].frequency
