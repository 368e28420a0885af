"""Exact spectrum and Rabi dynamics of a cavity mode coupled to a trapped, moving emitter.

Energies are carried in units of the emitter-cavity coupling (hbar = g = 1).
Within an excitation sector ``m`` every energy is stored as an offset from the
sector reference ``(m + 1) * omega_a`` so that the large cavity frequency never
eats into double precision.
"""

from vibron_qed.errors import (
    ConvergenceError,
    DependencyError,
    NyquistError,
    ParameterError,
    PoleProximityError,
    RWAWarning,
    TruncationWarning,
)
from vibron_qed.model import (
    HBAR,
    DerivedConstants,
    DimensionlessModel,
    ModelParams,
    derive_constants,
    from_dimensionless,
    reference_params,
    to_dimensionless,
)

__all__ = [
    "HBAR",
    "ConvergenceError",
    "DependencyError",
    "DerivedConstants",
    "DimensionlessModel",
    "ModelParams",
    "NyquistError",
    "ParameterError",
    "PoleProximityError",
    "RWAWarning",
    "TruncationWarning",
    "derive_constants",
    "from_dimensionless",
    "reference_params",
    "to_dimensionless",
]

__version__ = "0.1.0"
