"""ICM layer likelihoods with the coregionalization matrix integrated out.

Under a Jeffreys prior on the S x S coregionalization matrix, a layer
``M ~ N(0, B kron K)`` (M is n x S) has marginal likelihood

    L(M | theta) propto |K|^(-S/2) |n B_hat|^(-n/2),   B_hat = M^T K^-1 M / n.

Constants independent of theta and M are dropped; every consumer works with
differences of log-likelihoods.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DegenerateLikelihoodError, DomainError, FactorizationError, ShapeError
from .linalg import SpdFactor, as_matrix, spd_factorize


@dataclass(frozen=True)
class IcmLayerParams:
    theta: float
    width: int

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError("theta must be positive")
        if self.width < 1:
            raise DomainError("width must be at least 1")


@dataclass(frozen=True)
class CoregEstimate:
    b_hat: np.ndarray
    sample_size: int

    @property
    def width(self):
        return self.b_hat.shape[0]


@dataclass(frozen=True)
class PriorSpec:
    """Gamma(shape, rate) priors on the two lengthscales."""

    shape: float = 1.5
    rate_theta_y: float = 3.9 / 6
    rate_theta_w: float = 3.9 / 4

    def __post_init__(self):
        if min(self.shape, self.rate_theta_y, self.rate_theta_w) <= 0:
            raise DomainError("prior parameters must be strictly positive")

    @property
    def mean_theta_y(self):
        return self.shape / self.rate_theta_y

    @property
    def mean_theta_w(self):
        return self.shape / self.rate_theta_w


def gls_coreg(M, k_factor):
    """Plug-in estimate M^T K^-1 M / n."""
    M = as_matrix(M, "M")
    if not isinstance(k_factor, SpdFactor):
        raise TypeError("k_factor must be an SpdFactor")
    n = M.shape[0]
    if n < 1 or k_factor.size != n:
        raise ShapeError(f"M has {n} rows but the kernel factor is {k_factor.size} x {k_factor.size}")
    G = k_factor.inv_quad(M) / n
    G = 0.5 * (G + G.T)
    G.setflags(write=False)
    return CoregEstimate(b_hat=G, sample_size=n)


def log_marginal(M, K, S=None):
    """-(S/2) log|K| - (n/2) log|n B_hat|, with B_hat the GLS estimate.

    ``K`` may be a matrix or an :class:`SpdFactor`.

    Raises:
        DegenerateLikelihoodError: n <= S, or n B_hat is singular.
    """
    M = as_matrix(M, "M")
    n, width = M.shape
    if S is None:
        S = width
    if S != width:
        raise ShapeError(f"width S={S} does not match M with {width} columns")
    if n <= S:
        raise DegenerateLikelihoodError(f"need n > S, got n={n}, S={S}")
    kf = K if isinstance(K, SpdFactor) else spd_factorize(K)
    if kf.size != n:
        raise ShapeError("kernel size does not match M")
    est = gls_coreg(M, kf)
    try:
        nb = spd_factorize(n * est.b_hat)
    except FactorizationError as exc:
        raise DegenerateLikelihoodError("n * B_hat is singular") from exc
    return -0.5 * S * kf.log_det - 0.5 * n * nb.log_det


def log_gamma_prior(theta, shape, rate):
    """Unnormalized Gamma log-density; -inf outside the support."""
    if theta <= 0:
        return -math.inf
    return (shape - 1.0) * math.log(theta) - rate * theta


def layer_log_marginal(Z, M, theta, jitter):
    """:func:`log_marginal` of ``M`` under ``kernel_matrix(Z, theta, jitter)``.

    Runs the fused kernel from :mod:`deepicmgp.backend`; the kernel matrix
    gets one retry at 100x jitter when it fails to factorize.

    Raises:
        FactorizationError: the kernel matrix is not positive definite.
        DegenerateLikelihoodError: n <= S or n B_hat is singular.
    """
    n, S = M.shape
    if n <= S:
        raise DegenerateLikelihoodError(f"need n > S, got n={n}, S={S}")
    value, status = backend.layer_loglik(Z, M, float(theta), float(jitter))
    if status == backend.KERNEL_NOT_PD:
        raise FactorizationError(f"kernel matrix not positive definite at theta={theta:.6g}")
    if status == backend.DEGENERATE:
        raise DegenerateLikelihoodError(f"n * B_hat is singular at theta={theta:.6g}")
    return float(value)
