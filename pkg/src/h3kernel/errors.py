"""Exception and warning types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NonConvergenceError(RuntimeError):
    """A truncated series or iteration stopped before reaching its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ResolutionError(ValueError):
    """A profile is too narrow to be represented on the requested grid."""


class StepSizeError(ValueError):
    """A time step is too coarse for the configured origin guard."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values."""


class TailTruncationWarning(UserWarning):
    """Probability mass beyond a truncated integration range is not negligible."""
