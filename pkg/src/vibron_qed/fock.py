"""Truncated phonon Fock space and the excitation-sector Hamiltonians.

Each conserved sector ``m`` (excitation number m + 1) is spanned by the two
branches ``|m+1, n, g>`` and ``|m, n, e>`` with n = 0..n_max.  Matrices are
branch-major: the g-branch occupies rows 0..n_max, the e-branch the rest.

Block Hamiltonians live in the rotated phonon frame b -> i b, in which the
optomechanical term becomes ``eta a^dag a (b + b^dag)`` and every matrix
element is real.  Energies are offsets from ``model.sector_reference(m)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from vibron_qed.errors import ParameterError, TruncationWarning
from vibron_qed.model import DimensionlessModel

FRAME_ROTATED = "tilde-rotated"
FRAME_COMPLEX = "complex"
FRAME_ORIGINAL = "original"

EDGE_WEIGHT_WARN = 1e-8


@dataclass(frozen=True)
class PhononBasis:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.dim, dtype=float))

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), 1)

    def quadrature(self) -> np.ndarray:
        """b + b^dag (real symmetric tridiagonal)."""
        a = self.annihilation()
        return a + a.T

    def doubled(self) -> "PhononBasis":
        return PhononBasis(2 * self.n_max)


@dataclass(frozen=True)
class BlockHamiltonian:
    m: int
    matrix: np.ndarray
    n_max: int
    frame: str = FRAME_ROTATED
    reference: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def g_slice(self) -> slice:
        return slice(0, self.n_max + 1)

    def e_slice(self) -> slice:
        return slice(self.n_max + 1, 2 * (self.n_max + 1))


@dataclass(frozen=True)
class DisplacementMatrix:
    theta: float
    matrix: np.ndarray


def _check_sector(m) -> int:
    if int(m) != m or m < 0:
        raise ParameterError(f"sector index m must be a non-negative integer, got {m!r}")
    return int(m)


def build_block(m: int, model: DimensionlessModel, basis: PhononBasis) -> BlockHamiltonian:
    """Real symmetric sector Hamiltonian (rotated frame), offset by (m+1) omega_a.

    ``H11 = w n + (m+1) eta X + (m+1)^2 chi`` on the g-branch,
    ``H22 = w n + (Omega - omega_a) + m eta X + m^2 chi`` on the e-branch,
    coupled by ``sqrt(m+1) g``; X = b + b^dag.
    """
    m = _check_sector(m)
    N = basis.dim
    num = basis.number()
    X = basis.quadrature()
    eye = np.eye(N)
    w, eta, chi = model.omega, model.eta, model.chi
    h11 = w * num + (m + 1) * eta * X + (m + 1) ** 2 * chi * eye
    h22 = w * num + model.detuning * eye + m * eta * X + m * m * chi * eye
    c = np.sqrt(m + 1) * model.g * eye
    H = np.block([[h11, c], [c, h22]])
    H.setflags(write=False)
    return BlockHamiltonian(m=m, matrix=H, n_max=basis.n_max, reference=model.sector_reference(m))


def build_block_complex(m: int, model: DimensionlessModel, basis: PhononBasis) -> BlockHamiltonian:
    """Sector Hamiltonian before the b -> i b rotation: coupling ``i eta a^dag a (b - b^dag)``."""
    m = _check_sector(m)
    N = basis.dim
    num = basis.number()
    b = basis.annihilation()
    Y = 1j * (b - b.T)
    eye = np.eye(N)
    w, eta, chi = model.omega, model.eta, model.chi
    h11 = w * num + (m + 1) * eta * Y + (m + 1) ** 2 * chi * eye
    h22 = w * num + model.detuning * eye + m * eta * Y + m * m * chi * eye
    c = np.sqrt(m + 1) * model.g * eye
    H = np.block([[h11, c], [c, h22]])
    return BlockHamiltonian(m=m, matrix=H, n_max=basis.n_max, frame=FRAME_COMPLEX,
                            reference=model.sector_reference(m))


def build_block_original(m: int, model: DimensionlessModel, basis: PhononBasis) -> BlockHamiltonian:
    """Sector Hamiltonian before the polaron transform.

    The coupling carries the recoil factor: ``<m+1,g| H |m,e> = sqrt(m+1) g exp(-i k alpha X)``.
    No Kerr or optomechanical terms appear in this frame.
    """
    m = _check_sector(m)
    N = basis.dim
    num = basis.number()
    eye = np.eye(N)
    kick = displacement_matrix(-model.lamb_dicke, basis, warn=False).matrix
    c = np.sqrt(m + 1) * model.g
    H = np.block([
        [model.omega * num + 0j, c * kick],
        [c * kick.conj().T, model.omega * num + model.detuning * eye],
    ])
    return BlockHamiltonian(m=m, matrix=H, n_max=basis.n_max, frame=FRAME_ORIGINAL,
                            reference=model.sector_reference(m))


def displacement_matrix(theta: float, basis: PhononBasis, warn: bool = True) -> DisplacementMatrix:
    """Matrix of ``exp(i theta (b + b^dag))`` on the truncated basis.

    Built by exponentiating the truncated generator through its eigenbasis, so
    the result is unitary to machine precision on the whole truncated space.
    """
    X = basis.quadrature()
    lam, vec = np.linalg.eigh(X)
    D = (vec * np.exp(1j * theta * lam)) @ vec.T
    if warn:
        _warn_edge_weight(np.abs(D[:, 0]) ** 2, basis, f"displacement theta={theta:g}")
    return DisplacementMatrix(theta=float(theta), matrix=D)


def coherent_amplitudes(amplitude: complex, basis: PhononBasis) -> np.ndarray:
    """Closed-form coherent state ``exp(-|a|^2/2) a^n / sqrt(n!)`` on the truncated basis."""
    n = np.arange(basis.dim)
    a = complex(amplitude)
    if a == 0:
        out = np.zeros(basis.dim, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(a) ** 2 + n * np.log(abs(a)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(a))


def rotation_phases(basis: PhononBasis) -> np.ndarray:
    """Diagonal of the map from b-Fock amplitudes to rotated-frame amplitudes (i^n)."""
    return 1j ** np.arange(basis.dim)


def _warn_edge_weight(probs: np.ndarray, basis: PhononBasis, what: str) -> None:
    tail = float(np.sum(probs[-max(2, basis.dim // 10):]))
    if tail > EDGE_WEIGHT_WARN:
        warnings.warn(
            f"{what}: weight {tail:.2e} near the truncation edge n_max={basis.n_max}",
            TruncationWarning,
            stacklevel=3,
        )


def transformed_initial_state(m: int, basis: PhononBasis, model: DimensionlessModel) -> np.ndarray:
    """Polaron-transformed ``|m+1, 0, g>`` in the rotated frame of :func:`build_block`.

    The g-branch holds the vacuum displaced by ``k alpha (m+1)``; after the
    b -> i b rotation its amplitudes are real, ``(-theta)^n e^{-theta^2/2} / sqrt(n!)``.
    """
    m = _check_sector(m)
    theta = model.lamb_dicke * (m + 1)
    D = displacement_matrix(theta, basis)
    g_branch = rotation_phases(basis) * D.matrix[:, 0]
    if np.max(np.abs(g_branch.imag)) > 1e-12:
        raise ArithmeticError("rotated initial state is not real; frame conventions disagree")
    psi = np.zeros(2 * basis.dim)
    psi[: basis.dim] = g_branch.real
    return psi


def bare_initial_state(m: int, basis: PhononBasis) -> np.ndarray:
    """``|m+1, 0, g>`` with no transform (the state to use with :func:`build_block_original`)."""
    _check_sector(m)
    psi = np.zeros(2 * basis.dim)
    psi[0] = 1.0
    return psi


def excitation_number_operator(basis: PhononBasis, m: int) -> np.ndarray:
    """``a^dag a + |e><e|`` restricted to sector m: (m+1) times the identity."""
    m = _check_sector(m)
    return (m + 1) * np.eye(2 * basis.dim)


def g_branch_projector(basis: PhononBasis) -> np.ndarray:
    """Projector on the photon-(m+1), ground-state-emitter branch, traced over phonons."""
    P = np.zeros((2 * basis.dim, 2 * basis.dim))
    idx = np.arange(basis.dim)
    P[idx, idx] = 1.0
    return P
