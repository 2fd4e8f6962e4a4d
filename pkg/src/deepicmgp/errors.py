"""Exception hierarchy shared by every module."""

import numpy as np


class DeepIcmError(Exception):
    """Base class for all package errors."""


class ShapeError(DeepIcmError, ValueError):
    """Array dimensions are inconsistent."""


class DomainError(DeepIcmError, ValueError):
    """An argument lies outside its mathematical domain."""


class DataError(DeepIcmError, ValueError):
    """Input data is malformed (bad CSV, NaN, out-of-bounds rows)."""


class UnknownFunctionError(DeepIcmError, KeyError):
    """A benchmark name is not registered."""


class FactorizationError(DeepIcmError, np.linalg.LinAlgError):
    """Cholesky factorization failed.

    Attributes:
        pivot: 1-based index of the leading minor that is not positive
            definite, as reported by LAPACK ``potrf``.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DegenerateLikelihoodError(DeepIcmError, ArithmeticError):
    """The marginal likelihood cannot be evaluated (n <= S or singular nB)."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class EmptyCandidateError(DeepIcmError, ValueError):
    """No admissible candidate remains after exclusion."""
