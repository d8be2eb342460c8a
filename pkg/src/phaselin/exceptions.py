"""Exception types raised across the toolkit."""


class PhaselinError(Exception):
    """Base class for all toolkit errors."""


class FieldMismatchError(PhaselinError, ValueError):
    """Real- and complex-field objects were mixed in one problem instance."""


class DimensionMismatchError(PhaselinError, ValueError):
    """Array shapes are inconsistent with each other."""


class DegenerateCovarianceError(PhaselinError):
    """A matrix handed in as a covariance is not positive semidefinite."""


class InconsistentMomentsError(PhaselinError):
    """Derived moments violate a property the model guarantees.

    Raised e.g. when the diagonal of a nominally Hermitian covariance has a
    large imaginary part, or when the predicted MSE comes out negative by
    more than round-off allows.  Either points at a broken covariance
    construction upstream, never at bad luck.
    """


class SingularObservationCovarianceError(PhaselinError):
    """The observation covariance stayed singular through the whole
    regularization ladder."""

    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class DegenerateInitializerError(PhaselinError):
    """The spectral surrogate matrix is numerically zero (or the measured
    energy is), so no meaningful initial guess exists."""


class PowerIterationError(PhaselinError):
    """Power iteration did not converge within the iteration budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ZeroInitialGuessError(PhaselinError, ValueError):
    """The refinement loop was started from the all-zero guess, which is a
    fixed point that estimates nothing."""


class StepSizeError(PhaselinError):
    """Gradient descent diverged with the configured step size."""


class UndefinedMetricError(PhaselinError, ValueError):
    """The requested metric is not defined for these inputs."""


class ConfigError(PhaselinError, ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
