"""Physical parameters, derived recoil constants and the dimensionless frame.

All downstream modules work with :class:`DimensionlessModel`, where hbar = 1
and every frequency is expressed in units of the coupling ``g``.  SI values
only appear here and at the command-line boundary.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from vibron_qed.errors import ParameterError, RWAWarning

HBAR = 1.054571817e-34  # J s (CODATA 2018, exact in SI 2019)

RWA_RATIO = 0.01
_CONSISTENCY_RTOL = 1e-12

CONFIG_KEYS = {
    "mass_kg": "M",
    "omega_emitter": "Omega",
    "omega_cavity": "omega_a",
    "omega_trap": "omega",
    "wavevector": "k",
    "wavelength": "wavelength",
    "coupling_g": "g",
}
REQUIRED_CONFIG_KEYS = ("mass_kg", "omega_emitter", "omega_cavity", "omega_trap", "coupling_g")


@dataclass(frozen=True)
class ModelParams:
    """SI inputs: mass [kg], angular frequencies [rad/s], wave vector [1/m].

    ``k`` may be omitted when ``wavelength`` is given; if both are present they
    must satisfy ``k * wavelength == 2 pi``.
    """

    M: float
    Omega: float
    omega_a: float
    omega: float
    k: float | None
    g: float
    wavelength: float | None = None

    def __post_init__(self):
        k = self.k
        if self.wavelength is not None:
            _require_positive("wavelength", self.wavelength)
            k_from_lambda = 2.0 * math.pi / self.wavelength
            if k is None:
                object.__setattr__(self, "k", k_from_lambda)
            elif not math.isclose(k * self.wavelength, 2.0 * math.pi, rel_tol=_CONSISTENCY_RTOL):
                raise ParameterError(
                    f"wavevector {k!r} and wavelength {self.wavelength!r} are inconsistent "
                    f"(k*lambda = {k * self.wavelength!r}, expected 2*pi)"
                )
        elif k is None:
            raise ParameterError("either a wavevector or a wavelength is required")

        # k = 0 is the recoil-free limit and is allowed
        for name in ("M", "Omega", "omega_a", "omega", "g"):
            _require_positive(name, getattr(self, name))
        if not (math.isfinite(self.k) and self.k >= 0.0):
            raise ParameterError(f"k must be finite and non-negative, got {self.k!r}")

        if self.g > RWA_RATIO * min(self.omega_a, self.Omega):
            warnings.warn(
                f"g = {self.g:g} exceeds {RWA_RATIO:g} * min(omega_a, Omega); "
                "the rotating-wave approximation may not hold",
                RWAWarning,
                stacklevel=3,
            )

    def replace(self, **changes) -> "ModelParams":
        if "k" in changes and "wavelength" not in changes:
            changes["wavelength"] = None
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    """Recoil-induced constants.

    alpha : oscillator length sqrt(hbar / 2 M omega) [m]
    chi : Kerr strength k^2 alpha^2 omega [rad/s]
    eta : optomechanical strength k alpha omega [rad/s]
    lamb_dicke : k alpha (dimensionless)
    """

    alpha: float
    chi: float
    eta: float
    lamb_dicke: float


@dataclass(frozen=True)
class DimensionlessModel:
    """Model in units hbar = g = 1.

    ``g_si`` and ``mass_kg`` are carried along only so that the SI parameters
    can be reconstructed.  ``eta`` and ``chi`` are stored independently because
    several checks switch one of them off while keeping the other.
    """

    omega: float
    omega_a: float
    Omega: float
    eta: float
    chi: float
    lamb_dicke: float
    g: float = 1.0
    g_si: float = 1.0
    mass_kg: float = 1.0

    @property
    def detuning(self) -> float:
        """Emitter-cavity detuning Omega - omega_a."""
        return self.Omega - self.omega_a

    def sector_reference(self, m: int) -> float:
        """Energy origin of sector ``m``: the bare energy (m+1) omega_a of |m+1, 0, g>."""
        return (m + 1) * self.omega_a

    def replace(self, **changes) -> "DimensionlessModel":
        return dataclasses.replace(self, **changes)

    def static_emitter(self) -> "DimensionlessModel":
        """Same model with the recoil switched off (k alpha = 0)."""
        return self.replace(eta=0.0, chi=0.0, lamb_dicke=0.0)


def _require_positive(name: str, value: Any) -> None:
    try:
        ok = math.isfinite(value) and value > 0.0
    except TypeError:
        ok = False
    if not ok:
        raise ParameterError(f"{name} must be a finite positive number, got {value!r}")


def derive_constants(p: ModelParams) -> DerivedConstants:
    """Compute the oscillator length, Kerr and optomechanical strengths.

    The Kerr strength is evaluated both as ``k^2 alpha^2 omega`` and as the
    trap-independent recoil frequency ``hbar k^2 / 2M``; the two must agree.
    """
    alpha = math.sqrt(HBAR / (2.0 * p.M * p.omega))
    kalpha = p.k * alpha
    chi = kalpha * kalpha * p.omega
    eta = kalpha * p.omega
    chi_recoil = HBAR * p.k * p.k / (2.0 * p.M)
    if not math.isclose(chi, chi_recoil, rel_tol=1e-12, abs_tol=0.0):
        raise ArithmeticError(f"Kerr strength cross-check failed: {chi!r} vs {chi_recoil!r}")
    return DerivedConstants(alpha=alpha, chi=chi, eta=eta, lamb_dicke=kalpha)


def to_dimensionless(p: ModelParams, d: DerivedConstants | None = None) -> DimensionlessModel:
    if d is None:
        d = derive_constants(p)
    g = p.g
    return DimensionlessModel(
        omega=p.omega / g,
        omega_a=p.omega_a / g,
        Omega=p.Omega / g,
        eta=d.eta / g,
        chi=d.chi / g,
        lamb_dicke=d.lamb_dicke,
        g=1.0,
        g_si=g,
        mass_kg=p.M,
    )


def from_dimensionless(dm: DimensionlessModel) -> ModelParams:
    """Inverse of :func:`to_dimensionless` (requires the carried ``g_si``/``mass_kg``)."""
    g = dm.g_si
    omega = dm.omega * g
    alpha = math.sqrt(HBAR / (2.0 * dm.mass_kg * omega))
    return ModelParams(
        M=dm.mass_kg,
        Omega=dm.Omega * g,
        omega_a=dm.omega_a * g,
        omega=omega,
        k=dm.lamb_dicke / alpha,
        g=g,
    )


def reference_params(omega_trap: float = 1e9) -> ModelParams:
    """Rydberg-platform parameter set: Omega = omega_a = 1e14, g = 1e8 rad/s, k = 1e7 /m, M = 1e-27 kg."""
    return ModelParams(M=1e-27, Omega=1e14, omega_a=1e14, omega=omega_trap, k=1e7, g=1e8)


def params_from_mapping(values: Mapping[str, Any], source: str = "<config>") -> ModelParams:
    """Build :class:`ModelParams` from the flat configuration keys.

    Unknown keys are rejected so typos do not pass silently.
    """
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ParameterError(f"{source}: unknown key(s) {', '.join(unknown)}")
    missing = [key for key in REQUIRED_CONFIG_KEYS if values.get(key) is None]
    if missing:
        raise ParameterError(f"{source}: missing required key '{missing[0]}'")
    if values.get("wavevector") is None and values.get("wavelength") is None:
        raise ParameterError(f"{source}: missing required key 'wavevector' (or 'wavelength')")

    kwargs: dict[str, Any] = {}
    for key, field in CONFIG_KEYS.items():
        raw = values.get(key)
        if raw is None:
            kwargs[field] = None
            continue
        try:
            kwargs[field] = float(raw)
        except (TypeError, ValueError):
            raise ParameterError(f"{source}: key '{key}' is not a number: {raw!r}") from None
    try:
        return ModelParams(**kwargs)
    except ParameterError as exc:
        raise ParameterError(f"{source}: {exc}") from None


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a flat ``key: value`` YAML (or JSON) parameter file."""
    path = Path(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ParameterError(f"{where}: cannot parse configuration ({exc})") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: expected a flat key-value mapping")
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ParameterError(f"{path}: key '{key}' must be a scalar")
    return data
