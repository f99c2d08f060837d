"""
Exception hierarchy shared by the sampling library and the benchmark harness.
"""


class HHMalaError(Exception):
    """Base class for every error raised by hhmala."""


class DimensionMismatchError(HHMalaError, ValueError):
    """Operands have incompatible shapes."""


class DegenerateReflectorError(HHMalaError):
    """The two vectors defining a Householder reflection coincide."""


class NotOrthonormalError(HHMalaError, ValueError):
    """A basis expected to be column-orthonormal is not."""


class RankDeficiencyError(HHMalaError):
    """Gram-Schmidt met a (numerically) dependent column."""


class NotSymmetricError(HHMalaError, ValueError):
    """A matrix expected to be symmetric is not."""


class SingularPreconditionerError(HHMalaError):
    """A preconditioner could not be inverted."""


class MissingMetadataError(HHMalaError):
    """A target lacks the ground-truth metadata an operation needs."""


class ConvergenceError(HHMalaError):
    """An iterative solver did not converge."""


class StuckChainError(HHMalaError):
    """A chain (or one of its coordinates) never moved."""


class ConfigError(HHMalaError, ValueError):
    """Invalid experiment configuration.

    Args:
        key: The offending configuration key, when there is one.
        message: Human-readable description.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SingularCovarianceError(HHMalaError, ValueError):
    """A target covariance could not be factorised."""
