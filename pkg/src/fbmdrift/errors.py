"""Exception types raised by fbmdrift.

Everything derives from :class:`FbmDriftError` so callers can catch the
package's failures with a single except clause. The CLI maps these to
exit code 2 (bad input / bad state) while plain OS errors stay exit 1.
"""

__all__ = [
    "FbmDriftError",
    "NegativeEigenvalueError",
    "InvalidExponentError",
    "UnknownModelError",
    "InvalidParamsError",
    "UnknownKernelError",
    "InvalidGammaError",
    "NonFiniteStateError",
    "MissingFineGridError",
    "EmptyCurveError",
    "PlanInvalidError",
    "EmptyReportError",
]


class FbmDriftError(Exception):
    """Base class for all package errors."""


class NegativeEigenvalueError(FbmDriftError):
    """Circulant embedding produced an eigenvalue below -tol * max."""


class InvalidExponentError(FbmDriftError):
    """Hurst or Holder exponent outside its valid range."""


class UnknownModelError(FbmDriftError):
    """Drift model name not in the registry."""


class InvalidParamsError(FbmDriftError):
    """Model parameters violate their constraints."""


class UnknownKernelError(FbmDriftError):
    """Kernel name not in the registry."""


class InvalidGammaError(FbmDriftError):
    """Sampling-rate exponent gamma must exceed 1."""


class NonFiniteStateError(FbmDriftError):
    """Euler iteration produced NaN or infinity."""


class MissingFineGridError(FbmDriftError):
    """Operation needs the fine grid, but the path was simulated without it."""


class EmptyCurveError(FbmDriftError):
    """Estimator undefined at every requested evaluation point."""


class PlanInvalidError(FbmDriftError):
    """Experiment plan failed validation."""


class EmptyReportError(FbmDriftError):
    """Report has no rows to emit."""
