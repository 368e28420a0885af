"""Closed-form dressed-state results and the two-frequency Rabi prediction.

Dressed states diagonalise the emitter-cavity part (Kerr term included,
optomechanical term dropped).  The optomechanical term then hybridises the
closest pair ``psi_+^(m,0)`` / ``psi_-^(m,1)``; the two-peak prediction
neglects the Kerr shift, as the simple level diagram does.

Energies are offsets from the sector reference ``(m+1) omega_a`` unless a
function says otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from vibron_qed.errors import ParameterError
from vibron_qed.fock import PhononBasis, build_block
from vibron_qed.model import DimensionlessModel

_RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class DressedLevel:
    m: int
    n: int
    branch: int
    energy: float
    theta: float

    @property
    def amplitudes(self) -> tuple[float, float]:
        """(e-branch, g-branch) amplitudes of the dressed state."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        return (c, s) if self.branch > 0 else (-s, c)


@dataclass(frozen=True)
class TwoPeakPrediction:
    m: int
    mu: float
    E_plus: float
    E_minus: float
    omega_plus: float
    omega_minus: float

    @property
    def splitting(self) -> float:
        return self.omega_plus - self.omega_minus


def _branch(branch) -> int:
    if branch in (1, "+", "plus"):
        return 1
    if branch in (-1, "-", "minus"):
        return -1
    raise ParameterError(f"branch must be +1 or -1, got {branch!r}")


def _check(m, n=0):
    if m < 0 or n < 0:
        raise ParameterError(f"m and n must be non-negative, got m={m}, n={n}")


def mixing_angle(m: int, model: DimensionlessModel, kerr: bool = True) -> float:
    """theta in (0, pi) with ``tan theta = 2 sqrt(m+1) g / (Omega - omega_a - (2m+1) chi)``."""
    _check(m)
    chi = model.chi if kerr else 0.0
    return math.atan2(2.0 * math.sqrt(m + 1) * model.g, model.detuning - (2 * m + 1) * chi)


def dressed_energy(m: int, n: int, branch, model: DimensionlessModel, kerr: bool = True,
                   absolute: bool = False) -> float:
    """E_pm^(m,n) of the emitter-cavity Hamiltonian with the Kerr term.

    ``(m^2+m+1/2) chi + (m+1/2) w_a + Omega/2 + n w
    +- sqrt(((m+1/2) chi + w_a/2 - Omega/2)^2 + (m+1) g^2)``;
    returned relative to ``(m+1) w_a`` unless ``absolute``.
    """
    _check(m, n)
    s = _branch(branch)
    chi = model.chi if kerr else 0.0
    half_det = 0.5 * model.detuning
    root = math.sqrt(((m + 0.5) * chi - half_det) ** 2 + (m + 1) * model.g ** 2)
    offset = (m * m + m + 0.5) * chi + half_det + n * model.omega + s * root
    return offset + model.sector_reference(m) if absolute else offset


def dressed_level(m: int, n: int, branch, model: DimensionlessModel, kerr: bool = True) -> DressedLevel:
    return DressedLevel(m=m, n=n, branch=_branch(branch),
                        energy=dressed_energy(m, n, branch, model, kerr),
                        theta=mixing_angle(m, model, kerr))


def rabi_splitting(m: int, model: DimensionlessModel) -> float:
    """Resonant doublet splitting ``2 sqrt(((m+1/2) chi)^2 + (m+1) g^2)``."""
    _check(m)
    return 2.0 * math.sqrt(((m + 0.5) * model.chi) ** 2 + (m + 1) * model.g ** 2)


def transition_intensity(m: int, model: DimensionlessModel, kerr: bool = False) -> float:
    """|<psi_+^(m,0)| eta a^dag a (b - b^dag) |psi_-^(m,1)>| = (eta / 2) sin theta.

    The e-part of the dressed pair carries photon number m and the g-part m+1,
    so the matrix element reduces to ``eta cos(theta/2) sin(theta/2)``.  With
    the Kerr shift dropped and Omega = omega_a this is eta / 2 for every m.
    """
    _check(m)
    return 0.5 * model.eta * math.sin(mixing_angle(m, model, kerr))


def two_peak_frequencies(m: int, model: DimensionlessModel) -> TwoPeakPrediction:
    """Hybridised pair ``Psi_pm`` and the Rabi frequencies measured from ``psi_-^(m,0)``.

    With ``G = sqrt(m+1) g``: ``E_pm = w/2 +- sqrt((G - w/2)^2 + mu^2)`` (sector
    offsets) and ``omega_pm = G + w/2 +- sqrt((G - w/2)^2 + mu^2)``.
    """
    _check(m)
    if abs(model.detuning) > _RESONANCE_TOL * max(1.0, model.omega_a):
        warnings.warn("two-peak prediction assumes Omega = omega_a; detuning ignored", stacklevel=2)
    G = math.sqrt(m + 1) * model.g
    mu = transition_intensity(m, model, kerr=False)
    half = 0.5 * model.omega
    root = math.sqrt((G - half) ** 2 + mu * mu)
    return TwoPeakPrediction(m=m, mu=mu, E_plus=half + root, E_minus=half - root,
                             omega_plus=G + half + root, omega_minus=G + half - root)


def brute_force_intensity(m: int, model: DimensionlessModel, n_max: int = 8) -> float:
    """The same matrix element from numerically diagonalised dressed states.

    Diagonalises the block with the optomechanical coupling removed (Kerr kept),
    picks the dressed eigenvectors living on phonon numbers 0 and 1, and
    sandwiches the rotated-frame coupling ``eta N (b + b^dag)`` between them.
    """
    basis = PhononBasis(n_max)
    H0 = build_block(m, model.replace(eta=0.0), basis).matrix
    N = basis.dim

    def pick(n, branch):
        # without the optomechanical term the block splits into 2x2 blocks on rows (n, N + n)
        rows = [n, N + n]
        vals, vecs = np.linalg.eigh(H0[np.ix_(rows, rows)])
        out = np.zeros(2 * N)
        out[rows] = vecs[:, 1 if branch > 0 else 0]
        return out

    photons = np.concatenate([np.full(N, m + 1.0), np.full(N, float(m))])
    X = basis.quadrature()
    coupling = model.eta * np.diag(photons) @ np.kron(np.eye(2), X)
    return float(abs(pick(0, +1) @ coupling @ pick(1, -1)))


def report(model: DimensionlessModel, sectors=(0, 1)) -> list[tuple[str, float]]:
    """Closed-form quantities for a parameter set, as (label, value) rows."""
    rows = [
        ("omega_trap/g", model.omega),
        ("chi/g", model.chi),
        ("eta/g", model.eta),
        ("k*alpha", model.lamb_dicke),
    ]
    for m in sectors:
        rows.append((f"m={m} mixing angle theta [rad]", mixing_angle(m, model)))
        rows.append((f"m={m} E+^(m,0) - (m+1)w_a [g]", dressed_energy(m, 0, +1, model)))
        rows.append((f"m={m} E-^(m,0) - (m+1)w_a [g]", dressed_energy(m, 0, -1, model)))
        rows.append((f"m={m} E-^(m,1) - (m+1)w_a [g]", dressed_energy(m, 1, -1, model)))
        rows.append((f"m={m} Rabi splitting Delta [g]", rabi_splitting(m, model)))
        tp = two_peak_frequencies(m, model)
        rows.append((f"m={m} transition intensity mu [g]", tp.mu))
        rows.append((f"m={m} omega+ [g]", tp.omega_plus))
        rows.append((f"m={m} omega- [g]", tp.omega_minus))
    return rows
