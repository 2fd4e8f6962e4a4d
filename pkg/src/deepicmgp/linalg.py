"""Dense symmetric linear algebra and the isotropic squared-exponential kernel."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from . import backend
from .errors import DomainError, FactorizationError, ShapeError

DEFAULT_JITTER = 1e-8
SYMMETRY_TOL = 1e-10


def as_matrix(A, name="matrix"):
    """Return A as a finite, C-contiguous float64 2-d array."""
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} contains non-finite entries")
    return A


def _check_theta(theta):
    if not theta > 0:
        raise DomainError(f"lengthscale must be positive, got {theta}")


def sq_exp(u, v, theta):
    """exp(-||u - v||^2 / theta) for two points."""
    _check_theta(theta)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise ShapeError(f"point dimensions differ: {u.shape} vs {v.shape}")
    diff = u - v
    return float(np.exp(-np.dot(diff, diff) / theta))


def kernel_matrix(A, theta, jitter=DEFAULT_JITTER):
    """Kernel matrix of the rows of A with ``1 + jitter`` on the diagonal."""
    _check_theta(theta)
    if jitter < 0:
        raise DomainError(f"jitter must be non-negative, got {jitter}")
    A = as_matrix(A, "A")
    if A.shape[0] == 0:
        raise ShapeError("kernel_matrix needs at least one row")
    return backend.kernel_matrix(A, float(theta), float(jitter))


def cross_kernel(A, B, theta):
    """Cross-kernel between the rows of A (m x p) and B (n x p); no jitter."""
    _check_theta(theta)
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"column mismatch: {A.shape[1]} vs {B.shape[1]}")
    return backend.cross_kernel(A, B, float(theta))


@dataclass(frozen=True)
class SpdFactor:
    """Cholesky factor of a symmetric positive definite matrix.

    ``source`` is the matrix that was actually factorized (it includes any
    jitter added by the retry in :func:`spd_factorize`).
    """

    source: np.ndarray
    lower: np.ndarray
    log_det: float

    @property
    def size(self):
        return self.lower.shape[0]

    def whiten(self, b):
        """L^-1 b."""
        return solve_triangular(self.lower, b, lower=True, check_finite=False)

    def solve(self, b):
        """M^-1 b."""
        y = self.whiten(b)
        return solve_triangular(self.lower, y, lower=True, trans="T", check_finite=False)

    def inv_quad(self, b):
        """b^T M^-1 b for a vector, or the Gram matrix B^T M^-1 B for a matrix."""
        y = self.whiten(b)
        return y.T @ y

    def inverse(self):
        return self.solve(np.eye(self.size))


def _freeze(a):
    a.setflags(write=False)
    return a


def _potrf(M):
    L, info = dpotrf(M, lower=1, clean=1, overwrite_a=0)
    return L, info


def spd_factorize(M, retry_jitter=None):
    """Cholesky-factorize a symmetric matrix.

    The input is symmetrized by averaging with its transpose after checking
    that the asymmetry is below 1e-10. If the factorization fails and
    ``retry_jitter`` is given, ``retry_jitter`` is added to the diagonal and
    the factorization is attempted once more.

    Raises:
        ShapeError: M is not square or not symmetric.
        FactorizationError: M is not positive definite; ``pivot`` holds the
            1-based index of the failing leading minor.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix contains non-finite entries")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ShapeError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    M = 0.5 * (M + M.T)
    L, info = _potrf(M)
    if info != 0 and retry_jitter:
        M = M + retry_jitter * np.eye(M.shape[0])
        L, info = _potrf(M)
    if info != 0:
        raise FactorizationError(
            f"matrix is not positive definite (leading minor {info})", pivot=int(info)
        )
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return SpdFactor(source=_freeze(M), lower=_freeze(L), log_det=log_det)


def factor_kernel(A, theta, jitter=DEFAULT_JITTER):
    """Factorize ``kernel_matrix(A, theta, jitter)`` with one retry at 100x jitter."""
    K = kernel_matrix(A, theta, jitter)
    return spd_factorize(K, retry_jitter=99.0 * jitter)


def logdet(M):
    return spd_factorize(M).log_det


def kron_logdet(B, K):
    """log|B kron K| = n log|B| + S log|K| for B (S x S) and K (n x n)."""
    fb = B if isinstance(B, SpdFactor) else spd_factorize(B)
    fk = K if isinstance(K, SpdFactor) else spd_factorize(K)
    return fk.size * fb.log_det + fb.size * fk.log_det


def psd_clip(S, floor=0.0):
    """Project a symmetric matrix onto the PSD cone by clipping eigenvalues."""
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    if vals.min() >= floor:
        return S
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)
