"""Exception hierarchy shared by all himap modules."""

import numpy as np


class HimapError(Exception):
    """Base class for every error raised by himap."""


class DomainError(HimapError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(HimapError, ValueError):
    """Invalid configuration (depth, resolution, bandwidth grid, ...)."""


class DataError(HimapError, ValueError):
    """Malformed or empty input data."""


class WeightError(HimapError, ValueError):
    """Affine weights whose total is not strictly positive."""


class BandwidthError(HimapError, ValueError):
    """Kernel window too narrow for local linear weights."""


class SingularCovarianceError(HimapError, np.linalg.LinAlgError):
    """Predictor covariance is singular or numerically ill-conditioned."""

    def __init__(self, message, cond):
        super().__init__(f"{message} (condition number {cond:.3e})")
        self.cond = cond


class ResourceError(HimapError, RuntimeError):
    """Problem size exceeds the configured cap."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
