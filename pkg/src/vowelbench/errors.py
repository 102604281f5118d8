"""Exception types shared across the package.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class DataError(ValueError):
    """Malformed, missing or structurally unusable input data."""


class NumericalError(ArithmeticError):
    """A computation hit a singular or otherwise ill-conditioned state."""


class SingularCovarianceError(NumericalError):
    """A Gaussian component's covariance is not usable for density evaluation."""
