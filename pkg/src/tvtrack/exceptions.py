"""Exception types raised across the package."""


class TvtrackError(Exception):
    """Base class for all package errors."""


class InfeasibleSetError(TvtrackError):
    """A constraint set is empty or a scene puts the robot in collision."""


class ProjectionConvergenceError(TvtrackError):
    """Iterative projection did not converge within its iteration cap.

    Carries the last cycle residual in ``residual``.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class UnsupportedOperationError(TvtrackError):
    """Requested an operation a regularizer or set kind does not support."""


class InsufficientHistoryError(TvtrackError):
    """A backward difference was requested before any history exists."""


class ModelConstructionError(TvtrackError):
    """A prediction model could not be built (e.g. Hessian not PD)."""


class NumericalError(TvtrackError):
    """A linear solve or filter update hit a singular/ill-conditioned matrix."""


class DivergedError(TvtrackError):
    """A solver run produced non-finite iterates or unbounded error.

    ``step`` holds the step index (discrete runs) or time stamp
    (continuous runs) at which divergence was detected.
    """

    def __init__(self, message, step):
        super().__init__(f"{message} (at {step})")
        self.step = step


class DomainError(TvtrackError):
    """A barrier objective was evaluated outside its domain."""


class ExhaustedStreamError(TvtrackError):
    """A hint stream has no entry for the requested step."""


class IterationCapError(TvtrackError):
    """An inner solve exceeded its iteration cap."""


class ConfigError(TvtrackError):
    """An experiment configuration failed validation."""
