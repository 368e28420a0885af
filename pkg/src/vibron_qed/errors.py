"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its domain."""


class PoleProximityError(ArithmeticError):
    """A trial energy sits on (or within tolerance of) a pole of the recursion."""

    def __init__(self, message, n=None, frame=None):
        super().__init__(message)
        self.n = n
        self.frame = frame


class ConvergenceError(ArithmeticError):
    """A series or iteration did not converge within its cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DependencyError(RuntimeError):
    """A required upstream result is missing or not converged."""


class NyquistError(ParameterError):
    """The time step is too coarse for the fastest retained transition."""


class RWAWarning(UserWarning):
    """The coupling is large enough to question the rotating-wave approximation."""


class TruncationWarning(UserWarning):
    """Weight near the edge of the truncated phonon basis is not negligible."""
