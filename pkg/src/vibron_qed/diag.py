"""Truncated-basis exact diagonalisation: the independent oracle for the G-function roots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from vibron_qed.errors import ParameterError
from vibron_qed.fock import BlockHamiltonian, PhononBasis, build_block
from vibron_qed.model import DimensionlessModel

CEILING_SHIFT = 1e-8
CERTIFICATE_LEVELS = 10


@dataclass(frozen=True)
class EigenSystem:
    """Full decomposition of one sector block.

    ``level_shifts[j]`` is the change of eigenvalue j when the basis is doubled;
    ``ceiling`` is the highest eigenvalue such that it and every level below it
    moved by less than ``CEILING_SHIFT``.  Levels above the ceiling are
    truncation artefacts as far as validation is concerned.
    """

    m: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_max: int
    reference: float
    level_shifts: np.ndarray | None = None
    ceiling: float = math.inf

    @property
    def certificate(self) -> float:
        """Max shift of the lowest ``CERTIFICATE_LEVELS`` levels under n_max doubling."""
        if self.level_shifts is None:
            return math.nan
        return float(np.max(self.level_shifts[:CERTIFICATE_LEVELS]))

    @property
    def converged(self) -> bool:
        return self.certificate < CEILING_SHIFT

    def converged_mask(self) -> np.ndarray:
        return self.eigenvalues <= self.ceiling


def _eigh(matrix: np.ndarray):
    try:
        return linalg.eigh(matrix, driver="evr")
    except linalg.LinAlgError as exc:
        asym = float(np.max(np.abs(matrix - matrix.T.conj())))
        raise linalg.LinAlgError(
            f"eigensolver failed on {matrix.shape} matrix (max |H - H^T| = {asym:.3e}, "
            f"max |H| = {float(np.max(np.abs(matrix))):.3e}): {exc}"
        ) from exc


def eigen_decompose(H: BlockHamiltonian, model: DimensionlessModel | None = None,
                    certify: bool = True) -> EigenSystem:
    """Dense symmetric eigendecomposition with an optional doubling certificate.

    The certificate rebuilds the block at ``2 n_max`` (needs ``model``) and
    compares level by level.
    """
    M = H.matrix
    if np.max(np.abs(M - M.T.conj())) > 1e-13 * max(1.0, np.max(np.abs(M))):
        raise ParameterError("block Hamiltonian is not Hermitian")
    vals, vecs = _eigh(M)
    shifts = None
    ceiling = math.inf
    if certify:
        if model is None:
            raise ParameterError("a model is required to certify convergence")
        big = build_block(H.m, model, PhononBasis(2 * H.n_max))
        vals2 = linalg.eigvalsh(big.matrix)
        shifts = np.abs(vals - vals2[: vals.size])
        bad = np.nonzero(shifts >= CEILING_SHIFT)[0]
        good_upto = bad[0] if bad.size else vals.size
        ceiling = float(vals[good_upto - 1]) if good_upto > 0 else -math.inf
    return EigenSystem(m=H.m, eigenvalues=vals, eigenvectors=vecs, n_max=H.n_max,
                       reference=H.reference, level_shifts=shifts, ceiling=ceiling)


def solve_sector(m: int, model: DimensionlessModel, n_max: int = 60, auto: bool = True,
                 max_n: int = 480) -> EigenSystem:
    """Diagonalise sector m, doubling n_max until the lowest levels are converged."""
    while True:
        eig = eigen_decompose(build_block(m, model, PhononBasis(n_max)), model)
        if eig.converged or not auto or 2 * n_max > max_n:
            return eig
        n_max *= 2


@dataclass
class ValidationReport:
    m: int
    tol: float
    matches: list[tuple[float, float, float]] = field(default_factory=list)
    unmatched_roots: list[float] = field(default_factory=list)
    unmatched_eigenvalues: list[float] = field(default_factory=list)
    above_ceiling: list[float] = field(default_factory=list)
    ceiling: float = math.inf

    @property
    def max_diff(self) -> float:
        return max((d for _, _, d in self.matches), default=0.0)

    @property
    def worst(self) -> tuple[float, float, float] | None:
        return max(self.matches, key=lambda t: t[2], default=None)

    @property
    def passed(self) -> bool:
        return not self.unmatched_roots and not self.unmatched_eigenvalues and self.max_diff <= self.tol

    def lines(self) -> list[str]:
        out = [f"sector m={self.m}: {len(self.matches)} matched, max |diff| = {self.max_diff:.3e} "
               f"(tol {self.tol:g}), ceiling = {self.ceiling:.10g}"]
        if self.worst is not None and self.max_diff > self.tol:
            r, e, d = self.worst
            out.append(f"  worst offender: root {r:.12g} vs eigenvalue {e:.12g}, |diff| = {d:.3e}")
        for r in self.unmatched_roots:
            out.append(f"  unmatched root {r:.12g}")
        for e in self.unmatched_eigenvalues:
            out.append(f"  unmatched eigenvalue {e:.12g} (below ceiling)")
        for e in self.above_ceiling:
            out.append(f"  eigenvalue {e:.12g} above reliability ceiling (not validated)")
        out.append("  PASS" if self.passed else "  FAIL")
        return out


def validate_roots(roots, eig: EigenSystem, tol: float = 1e-6, window: tuple[float, float] | None = None
                   ) -> ValidationReport:
    """Greedy nearest-neighbour matching of G-function roots to oracle eigenvalues.

    ``roots`` is a :class:`~vibron_qed.gfun.SpectrumResult` or a plain sequence
    of sector offsets.  Eigenvalues inside the window (default: spanned by the
    roots) and below the ceiling must all be matched; those above the ceiling
    are listed separately and never count as failures.
    """
    if hasattr(roots, "energies"):
        r = list(np.asarray(roots.energies, dtype=float))
        if window is None:
            window = roots.window
    else:
        r = [float(x) for x in roots]
    vals = np.asarray(eig.eigenvalues, dtype=float)
    if window is None:
        window = (min(r, default=0.0) - 0.5 * tol, max(r, default=0.0) + 0.5 * tol)
    lo, hi = window
    in_window = [float(v) for v in vals if lo <= v <= hi]
    below = [v for v in in_window if v <= eig.ceiling]
    report = ValidationReport(m=eig.m, tol=tol, ceiling=eig.ceiling,
                              above_ceiling=[v for v in in_window if v > eig.ceiling])

    pairs = sorted(((abs(a - b), i, j) for i, a in enumerate(r) for j, b in enumerate(in_window)))
    used_r, used_e = set(), set()
    for d, i, j in pairs:
        if i in used_r or j in used_e:
            continue
        used_r.add(i)
        used_e.add(j)
        report.matches.append((r[i], in_window[j], d))
    report.matches.sort()
    report.unmatched_roots = [x for i, x in enumerate(r) if i not in used_r]
    report.unmatched_eigenvalues = [v for j, v in enumerate(in_window) if j not in used_e and v in below]
    # a root matched only to an above-ceiling level cannot be trusted either
    for root, ev, d in list(report.matches):
        if ev > eig.ceiling:
            report.matches.remove((root, ev, d))
            report.unmatched_roots.append(root)
    return report
