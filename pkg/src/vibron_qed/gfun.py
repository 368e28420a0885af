"""G-function for the exact spectrum of a sector, its poles, and pole-safe root finding.

Two Bogoliubov displacements diagonalise one diagonal block each:

* unprimed frame B, ``b = B - k alpha (m+1)``: flattens the g-branch;
* primed frame A, ``b = A - k alpha m``: flattens the e-branch.

In each frame the eigenvector is expanded over the frame's Fock states with
coefficients ``f_n`` (three-term recursion ``n f_n = K_{n-1} f_{n-1} - f_{n-2}``)
and ``e_n = -sqrt(m+1) g f_n / (n w - gamma - E)``.  Both expansions describe the
same eigenvector, so their projections onto any coherent state ``<z|`` must be
proportional; eliminating the ratio gives

    G_m(E) = S_e(zB) S'_e(zA) - S_f(zB) S'_f(zA),   S_f(z) = sum_n f_n z^n,

with ``zB = k alpha (m+1) + z`` and ``zA = -(k alpha m + z)``.  The recursion has a
singular point one Lamb-Dicke factor away from each frame origin, so the series
converge only if ``|zB|, |zA| < k alpha``.  The default ``anchor="midpoint"``
puts ``z`` halfway between the frames (``zB = zA = k alpha / 2``), where both
series converge geometrically with ratio 1/2.  ``anchor="vacuum"`` projects on
the phonon vacuum (``z = 0``).  For m = 0 that puts ``zB`` on the circle of
convergence: the terms decay only algebraically, so the tail test rejects it,
although the zeros of the truncated sum are stable (see :func:`g0_closed_form`).
For m >= 1 it diverges.

Energies are offsets ``eps = E - (m+1) omega_a`` in units of g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from vibron_qed.errors import ConvergenceError, ParameterError, PoleProximityError
from vibron_qed.model import DimensionlessModel

UNPRIMED = "unprimed"
PRIMED = "primed"

EPS_POLE = 1e-9
DEFAULT_TOL = 1e-12
DEFAULT_MAX_TERMS = 4000
_MIN_TERMS = 8
_RATIO_CEILING = 0.9


@dataclass(frozen=True)
class GFunctionEval:
    E: float
    m: int
    value: float
    terms_used: int
    tail_estimate: float
    scale: float
    nearest_pole_distance: float
    converged: bool = True
    anchor: str = "midpoint"


@dataclass(frozen=True)
class PoleSet:
    m: int
    reference: float
    offsets: tuple[float, ...]
    spacing: float
    frame: str = UNPRIMED

    @property
    def absolute(self) -> np.ndarray:
        return self.reference + np.asarray(self.offsets)

    def __len__(self):
        return len(self.offsets)


@dataclass
class Root:
    energy: float
    interval_index: int
    residual: float
    relative_residual: float
    pole_distance: float
    oracle: float | None = None

    @property
    def diff(self) -> float | None:
        return None if self.oracle is None else abs(self.energy - self.oracle)


@dataclass
class SpectrumResult:
    m: int
    reference: float
    window: tuple[float, float]
    roots: list[Root]
    poles: list[float]
    flags: list[str] = field(default_factory=list)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.roots])

    def absolute(self) -> np.ndarray:
        return self.reference + self.energies


def _check_model(m, model: DimensionlessModel) -> int:
    if int(m) != m or m < 0:
        raise ParameterError(f"sector index m must be a non-negative integer, got {m!r}")
    if not model.eta > 0.0:
        raise ParameterError(
            "the G-function needs a moving emitter (k alpha > 0); use the diagonalisation "
            "oracle for the static limit"
        )
    return int(m)


def _frame_shifts(model: DimensionlessModel, frame: str) -> tuple[float, float]:
    """(pole shift, beta - reference) so that ``n w - gamma - E = n w + shift - eps``."""
    if frame == UNPRIMED:
        return 0.0, model.chi + model.detuning
    if frame == PRIMED:
        return model.detuning, model.chi
    raise ParameterError(f"unknown frame {frame!r}")


def nearest_pole(eps, model: DimensionlessModel, frames=(UNPRIMED, PRIMED)):
    """Distance from ``eps`` to the nearest pole (and its index and frame)."""
    best = (math.inf, None, None)
    for frame in frames:
        shift, _ = _frame_shifts(model, frame)
        n = max(0, round((eps - shift) / model.omega))
        for cand in {max(0, n - 1), n, n + 1}:
            dist = abs(cand * model.omega + shift - eps)
            if dist < best[0]:
                best = (dist, cand, frame)
    return best


def k_coefficient(n: int, m: int, E: float, model: DimensionlessModel, frame: str = UNPRIMED,
                  eps_pole: float = EPS_POLE) -> float:
    """K_n of the f-recursion in the requested frame at sector offset ``E``.

    ``K_n = [(n w + beta - E) - (m+1) g^2 / (n w - gamma - E)] / (k alpha w)`` with
    (gamma, beta) = (-(m+1) w_a, k^2 a^2 w + m w_a + Omega) unprimed and
    (-m w_a - Omega, k^2 a^2 w + (m+1) w_a) primed.
    """
    m = _check_model(m, model)
    shift, beta = _frame_shifts(model, frame)
    den = n * model.omega + shift - E
    if abs(den) < eps_pole:
        raise PoleProximityError(f"E={E!r} is within {eps_pole:g} of pole n={n} ({frame})", n=n, frame=frame)
    return ((n * model.omega + beta - E) - (m + 1) * model.g ** 2 / den) / model.eta


@dataclass(frozen=True)
class RecursionCoeffs:
    """Unscaled recursion coefficients of both frames, overflow-safe.

    Each coefficient is stored as ``mantissa * 2**exponent`` (per-term binary
    exponent), since ``f_n`` grows like ``(k alpha)^-n`` and leaves double range
    after a few hundred terms.
    """

    E: float
    m: int
    f_mant: np.ndarray
    f_exp: np.ndarray
    e_mant: np.ndarray
    e_exp: np.ndarray
    fp_mant: np.ndarray
    fp_exp: np.ndarray
    ep_mant: np.ndarray
    ep_exp: np.ndarray

    def __len__(self):
        return len(self.f_mant)

    def _get(self, which: str):
        return {
            "f": (self.f_mant, self.f_exp),
            "e": (self.e_mant, self.e_exp),
            "f_primed": (self.fp_mant, self.fp_exp),
            "e_primed": (self.ep_mant, self.ep_exp),
        }[which]

    def value(self, which: str, n: int) -> float:
        """Coefficient as a float (may overflow to inf)."""
        mant, ex = self._get(which)
        try:
            return math.ldexp(float(mant[n]), int(ex[n]))
        except OverflowError:
            return math.copysign(math.inf, mant[n])

    def series(self, which: str, z: float, n_terms: int | None = None) -> float:
        """``sum_n c_n z^n`` with the exponent arithmetic done in log2."""
        mant, ex = self._get(which)
        n_terms = len(mant) if n_terms is None else n_terms
        if z == 0.0:
            return float(mant[0]) * 2.0 ** int(ex[0])
        n = np.arange(n_terms)
        log2 = ex[:n_terms] + n * math.log2(abs(z))
        sign = np.sign(z) ** n
        with np.errstate(over="ignore"):
            terms = mant[:n_terms] * sign * np.exp2(log2)
        return math.fsum(terms)


def _scaled_sequence(E, m, model, frame, n_terms):
    shift, beta = _frame_shifts(model, frame)
    c = math.sqrt(m + 1) * model.g
    w = model.omega
    f_mant = np.zeros(n_terms)
    f_exp = np.zeros(n_terms, dtype=np.int64)
    e_mant = np.zeros(n_terms)
    e_exp = np.zeros(n_terms, dtype=np.int64)
    prev_m, prev_e = 0.0, 0
    cur_m, cur_e = math.frexp(1.0)
    for n in range(n_terms):
        if n > 0:
            K = k_coefficient(n - 1, m, E, model, frame)
            # bring f_{n-2} to the exponent of f_{n-1}
            lower = math.ldexp(prev_m, prev_e - cur_e) if prev_m else 0.0
            val = (K * cur_m - lower) / n
            nm, ne = math.frexp(val)
            prev_m, prev_e = cur_m, cur_e
            cur_m, cur_e = nm, ne + cur_e
        f_mant[n], f_exp[n] = cur_m, cur_e
        den = n * w + shift - E
        em, ee = math.frexp(-c * cur_m / den)
        e_mant[n], e_exp[n] = em, ee + cur_e
    return f_mant, f_exp, e_mant, e_exp


def recursion_coeffs(E: float, m: int, model: DimensionlessModel, n_terms: int = 200) -> RecursionCoeffs:
    m = _check_model(m, model)
    dist, n_pole, frame = nearest_pole(E, model)
    if dist < EPS_POLE:
        raise PoleProximityError(f"E={E!r} sits on pole n={n_pole} ({frame})", n=n_pole, frame=frame)
    f = _scaled_sequence(E, m, model, UNPRIMED, n_terms)
    fp = _scaled_sequence(E, m, model, PRIMED, n_terms)
    return RecursionCoeffs(E, m, *f, *fp)


def anchor_points(m: int, model: DimensionlessModel, anchor="midpoint") -> tuple[float, float]:
    """Series arguments (zB, zA) for a projection onto the coherent state ``<z|``."""
    kappa1 = model.lamb_dicke * (m + 1)
    kappa0 = model.lamb_dicke * m
    if anchor == "midpoint":
        z = -0.5 * (kappa0 + kappa1)
    elif anchor == "vacuum":
        z = 0.0
    else:
        z = float(anchor)
    return kappa1 + z, -(kappa0 + z)


def g_values(E, m: int, model: DimensionlessModel, tol: float = DEFAULT_TOL, anchor="midpoint",
             max_terms: int = DEFAULT_MAX_TERMS, swap_frames: bool = False):
    """Vectorised G_m over an array of sector offsets.

    Returns ``(value, tail, scale, terms_used, converged)`` arrays.  ``scale`` is
    ``|S_e S'_e| + |S_f S'_f|``; the series stop once the estimated tail of G is
    below ``tol * scale`` (G itself vanishes at the roots, so it cannot set the
    scale).  Points must be off the poles of both frames.
    """
    m = _check_model(m, model)
    E = np.atleast_1d(np.asarray(E, dtype=float))
    zB, zA = anchor_points(m, model, anchor)
    w, eta = model.omega, model.eta
    c = math.sqrt(m + 1) * model.g
    c2 = c * c
    shiftB, betaB = _frame_shifts(model, UNPRIMED)
    shiftA, betaA = _frame_shifts(model, PRIMED)

    ones = np.ones_like(E)
    uB_prev, uB = np.zeros_like(E), ones.copy()
    uA_prev, uA = np.zeros_like(E), ones.copy()
    dB = shiftB - E
    dA = shiftA - E
    SfB, SeB = ones.copy(), -c / dB
    SfA, SeA = ones.copy(), -c / dA
    ratioB = np.zeros((4, E.size))
    ratioA = np.zeros((4, E.size))
    tail = np.full(E.size, np.inf)
    scale = np.abs(SeB * SeA) + np.abs(SfB * SfA)
    converged = np.zeros(E.size, dtype=bool)
    dead = ~np.isfinite(scale)
    terms = np.full(E.size, max_terms, dtype=np.int64)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(1, max_terms):
            KB = ((n - 1) * w + betaB - E - c2 / dB) / eta
            KA = ((n - 1) * w + betaA - E - c2 / dA) / eta
            uB_new = (zB * KB * uB - zB * zB * uB_prev) / n
            uA_new = (zA * KA * uA - zA * zA * uA_prev) / n
            dB = n * w + shiftB - E
            dA = n * w + shiftA - E
            active = ~converged & ~dead
            # frozen entries keep their converged sums
            SfB = np.where(active, SfB + uB_new, SfB)
            SeB = np.where(active, SeB - c * uB_new / dB, SeB)
            SfA = np.where(active, SfA + uA_new, SfA)
            SeA = np.where(active, SeA - c * uA_new / dA, SeA)

            ratioB[n % 4] = np.where(uB != 0, np.abs(uB_new / uB), 0.0)
            ratioA[n % 4] = np.where(uA != 0, np.abs(uA_new / uA), 0.0)
            uB_prev, uB = uB, uB_new
            uA_prev, uA = uA, uA_new

            if n < _MIN_TERMS:
                continue
            rB = ratioB.max(axis=0)
            rA = ratioA.max(axis=0)
            geomB = np.where(rB < _RATIO_CEILING, rB / (1.0 - rB), np.inf)
            geomA = np.where(rA < _RATIO_CEILING, rA / (1.0 - rA), np.inf)
            magB = np.maximum(np.abs(uB), np.abs(uB_prev))
            magA = np.maximum(np.abs(uA), np.abs(uA_prev))
            tailB_f = magB * geomB
            tailB_e = magB * c / np.abs(dB) * geomB
            tailA_f = magA * geomA
            tailA_e = magA * c / np.abs(dA) * geomA
            # zero-argument series terminate after n = 0
            tailB_f = np.where(zB == 0.0, 0.0, tailB_f)
            tailB_e = np.where(zB == 0.0, 0.0, tailB_e)
            tailA_f = np.where(zA == 0.0, 0.0, tailA_f)
            tailA_e = np.where(zA == 0.0, 0.0, tailA_e)
            cur_tail = (np.abs(SeA) * tailB_e + np.abs(SeB) * tailA_e
                        + np.abs(SfA) * tailB_f + np.abs(SfB) * tailA_f)
            cur_scale = np.abs(SeB * SeA) + np.abs(SfB * SfA)
            newly = active & np.isfinite(cur_tail) & (cur_tail <= tol * cur_scale)
            tail = np.where(active, cur_tail, tail)
            scale = np.where(active, cur_scale, scale)
            terms = np.where(newly, n + 1, terms)
            converged |= newly
            # on-pole or overflowing points drop out without stalling the rest
            dead |= active & ~(np.isfinite(uB) & np.isfinite(uA))
            if (converged | dead).all():
                break

    if swap_frames:
        value = SfA * SfB - SeA * SeB
    else:
        value = SeB * SeA - SfB * SfA
    return value, tail, scale, terms, converged


def g_function(E: float, m: int, model: DimensionlessModel, tol: float = DEFAULT_TOL,
               anchor="midpoint", max_terms: int = DEFAULT_MAX_TERMS,
               eps_pole: float = EPS_POLE) -> GFunctionEval:
    """Evaluate G_m at one sector offset ``E``.

    Raises
    ------
    PoleProximityError
        ``E`` lies within ``eps_pole`` of a pole of either frame.
    ConvergenceError
        The series did not reach ``tol`` within ``max_terms`` terms.
    """
    m = _check_model(m, model)
    dist, n_pole, frame = nearest_pole(E, model)
    if dist < eps_pole:
        raise PoleProximityError(f"E={E!r} is within {eps_pole:g} of pole n={n_pole} ({frame})",
                                 n=n_pole, frame=frame)
    value, tail, scale, terms, conv = g_values(E, m, model, tol=tol, anchor=anchor, max_terms=max_terms)
    if not conv[0]:
        raise ConvergenceError(
            f"G_{m}({E!r}) did not converge within {max_terms} terms (anchor={anchor!r})",
            diagnostics={"E": E, "m": m, "tail": float(tail[0]), "scale": float(scale[0]),
                         "anchor": anchor, "max_terms": max_terms},
        )
    return GFunctionEval(E=float(E), m=m, value=float(value[0]), terms_used=int(terms[0]),
                         tail_estimate=float(tail[0]), scale=float(scale[0]),
                         nearest_pole_distance=float(dist), converged=True,
                         anchor=anchor if isinstance(anchor, str) else f"{float(anchor):.17g}")


def g0_closed_form(E: float, model: DimensionlessModel, n_terms: int = 600) -> float:
    """Vacuum-projected G_0 in the single-sum form valid at resonance.

    ``G_0 = sum_n [g^2 / ((-n w + gamma + E)(gamma + E)) - 1] f_n (k alpha)^n``.
    """
    coeffs = recursion_coeffs(E, 0, model, n_terms)
    kalpha = model.lamb_dicke
    n = np.arange(n_terms)
    # gamma + E = eps (unprimed frame, sector offset)
    bracket = model.g ** 2 / ((-n * model.omega + E) * E) - 1.0
    log2 = coeffs.f_exp + n * math.log2(kalpha)
    with np.errstate(over="ignore"):
        terms = bracket * coeffs.f_mant * np.exp2(log2)
    return math.fsum(terms)


def pole_locations(m: int, model: DimensionlessModel, window: tuple[float, float],
                   frame: str = UNPRIMED) -> PoleSet:
    """Poles ``n w + shift`` (n >= 0) of one frame inside ``window`` (sector offsets).

    The unprimed set is ``E / hbar = n w + (m+1) w_a``.
    """
    lo, hi = window
    if not hi > lo:
        raise ParameterError(f"empty window {window!r}")
    shift, _ = _frame_shifts(model, frame)
    w = model.omega
    n_lo = max(0, math.ceil((lo - shift) / w))
    n_hi = math.floor((hi - shift) / w)
    offsets = tuple(n * w + shift for n in range(n_lo, n_hi + 1))
    return PoleSet(m=int(m), reference=model.sector_reference(m), offsets=offsets, spacing=w, frame=frame)


def spectrum_lower_bound(m: int, model: DimensionlessModel) -> float:
    """No eigenvalue of sector m lies below ``min(0, detuning) - sqrt(m+1) g``."""
    return min(0.0, model.detuning) - math.sqrt(m + 1) * model.g


def _intervals(m, model, window):
    lo, hi = window
    poles = set(pole_locations(m, model, window, UNPRIMED).offsets)
    poles |= set(pole_locations(m, model, window, PRIMED).offsets)
    cuts = sorted(p for p in poles if lo < p < hi)
    edges = [lo] + cuts + [hi]
    is_pole = [lo in poles] + [True] * len(cuts) + [hi in poles]
    return [(edges[i], edges[i + 1], is_pole[i], is_pole[i + 1]) for i in range(len(edges) - 1)], sorted(poles)


def _scan_points(a, b, pole_a, pole_b, step, w):
    count = max(4, int(math.ceil((b - a) / step)))
    pts = list(np.linspace(a, b, count + 1)[1:-1])
    offsets = [w * 10.0 ** (-k) for k in range(3, 9)]
    if pole_a:
        pts += [a + o for o in offsets if a + o < b]
    else:
        pts.append(a)
    if pole_b:
        pts += [b - o for o in offsets if b - o > a]
    else:
        pts.append(b)
    return np.unique(np.array(pts))


def _bisect(fn, a, fa, b, fb, xtol):
    while b - a > xtol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def find_roots(m: int, model: DimensionlessModel, window: tuple[float, float] | None = None,
               grid_density: int = 400, xtol: float = 1e-10, eigen=None, match_tol: float = 1e-6,
               anchor="midpoint", tol: float = DEFAULT_TOL) -> SpectrumResult:
    """Locate the zeros of G_m inside ``window`` (sector offsets).

    Each inter-pole interval is sampled on a uniform grid of ``grid_density``
    points per trap quantum (plus points approaching each pole geometrically),
    sign changes are bracketed and refined by bisection to ``xtol``.  Passing an
    :class:`~vibron_qed.diag.EigenSystem` attaches the nearest oracle eigenvalue
    to every root and flags oracle levels that no sign change accounts for
    (touching or near-degenerate roots).
    """
    m = _check_model(m, model)
    if window is None:
        lo = spectrum_lower_bound(m, model) - 0.5
        window = (lo, lo + 3 * model.omega)
    lo, hi = window
    if not hi > lo:
        raise ParameterError(f"empty window {window!r}")
    step = model.omega / grid_density
    intervals, poles = _intervals(m, model, window)

    def G(x):
        return g_values(x, m, model, tol=tol, anchor=anchor)[0][0]

    roots: list[Root] = []
    for idx, (a, b, pa, pb) in enumerate(intervals):
        pts = _scan_points(a, b, pa, pb, step, model.omega)
        val, tail, scale, terms, conv = g_values(pts, m, model, tol=tol, anchor=anchor)
        if not conv.all():
            bad = pts[~conv][0]
            raise ConvergenceError(f"G_{m} scan did not converge at E={bad!r}",
                                   diagnostics={"E": float(bad), "anchor": anchor})
        sgn = np.sign(val)
        for i in np.nonzero(sgn[1:] * sgn[:-1] < 0)[0]:
            x = _bisect(G, pts[i], val[i], pts[i + 1], val[i + 1], xtol)
            ev = g_function(x, m, model, tol=tol, anchor=anchor)
            roots.append(Root(energy=x, interval_index=idx, residual=abs(ev.value),
                              relative_residual=abs(ev.value) / ev.scale if ev.scale else math.inf,
                              pole_distance=ev.nearest_pole_distance))
        for i in np.nonzero(sgn == 0)[0]:
            roots.append(Root(energy=float(pts[i]), interval_index=idx, residual=0.0,
                              relative_residual=0.0, pole_distance=nearest_pole(pts[i], model)[0]))

    roots.sort(key=lambda r: r.energy)
    result = SpectrumResult(m=m, reference=model.sector_reference(m), window=(lo, hi), roots=roots,
                            poles=[p for p in poles if lo <= p <= hi])
    if eigen is not None:
        attach_oracle(result, eigen, match_tol)
    return result


def attach_oracle(result: SpectrumResult, eigen, match_tol: float = 1e-6) -> SpectrumResult:
    """Pair each root with the nearest oracle eigenvalue and flag unexplained levels."""
    vals = np.asarray(eigen.eigenvalues)
    for r in result.roots:
        j = int(np.argmin(np.abs(vals - r.energy)))
        r.oracle = float(vals[j])
    lo, hi = result.window
    ceiling = getattr(eigen, "ceiling", math.inf)
    found = result.energies
    for v in vals:
        if lo <= v <= hi and v <= ceiling:
            if found.size == 0 or np.min(np.abs(found - v)) > match_tol:
                result.flags.append(
                    f"oracle eigenvalue {v:.12g} has no G-function sign change within {match_tol:g} "
                    "(suspected double or touching root)"
                )
    return result


def find_lowest_roots(m: int, model: DimensionlessModel, count: int, eigen=None,
                      match_tol: float = 1e-6, **kwargs) -> SpectrumResult:
    """Grow the window one trap quantum at a time until ``count`` roots are found."""
    lo = spectrum_lower_bound(m, model) - 0.5
    hi = lo + max(2.0, math.ceil(count / 2 + 1)) * model.omega
    for _ in range(64):
        res = find_roots(m, model, window=(lo, hi), **kwargs)
        if len(res.roots) > count:
            # close the window halfway to the first unused root
            upper = 0.5 * (res.roots[count - 1].energy + res.roots[count].energy)
            res.roots = res.roots[:count]
            res.window = (lo, upper)
            res.poles = [p for p in res.poles if p <= upper]
            if eigen is not None:
                attach_oracle(res, eigen, match_tol)
            return res
        hi += model.omega
    raise ConvergenceError(f"could not find {count} roots in sector {m}")


def root_doublets(roots: Sequence[float], model: DimensionlessModel) -> list[tuple[int, float, float]]:
    """Rabi doublets straddling each unprimed pole ``n w``: (n, lower, upper) offsets.

    The doublet of sideband n is the nearest root below and the nearest root
    above the pole; only poles with roots on both sides are reported.
    """
    roots = np.sort(np.asarray(roots, dtype=float))
    out = []
    if roots.size == 0:
        return out
    n = 0
    while n * model.omega < roots[-1]:
        pole = n * model.omega
        below = roots[roots < pole]
        above = roots[roots > pole]
        if below.size and above.size:
            out.append((n, float(below[-1]), float(above[0])))
        n += 1
    return out
