"""Independent single-output GPs with plug-in lengthscales.

Each output gets its own lengthscale, sampled by the same sliding-window
MH used for the deep model against the single-output marginal likelihood;
the posterior mean is kept as a point estimate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .acquisition import (
    DEGENERACY_FACTOR,
    argmin_result,
    direct_quad_form,
    excluded_candidates,
)
from .data import Dataset
from .errors import FactorizationError
from .icm import PriorSpec, layer_log_marginal, log_gamma_prior
from .linalg import cross_kernel, factor_kernel, psd_clip
from .predictor import Prediction
from .sampler import SamplerConfig, mh_step


@dataclass(frozen=True)
class IndepGpModel:
    thetas: np.ndarray  # (Q,)
    train: Dataset
    jitter: float

    @property
    def q(self):
        return len(self.thetas)


def fit_output(x, y_col, config, priors=None):
    """Posterior-mean lengthscale for one output column (n x 1)."""
    priors = priors or PriorSpec()
    rng = np.random.default_rng(config.seed)
    jitter = config.jitter
    y_col = np.ascontiguousarray(np.reshape(y_col, (-1, 1)))
    theta = priors.mean_theta_y
    ll = layer_log_marginal(x, y_col, theta, jitter)
    kept = []
    for t in range(config.iterations):
        theta, ll, _ = mh_step(
            theta,
            lambda th: layer_log_marginal(x, y_col, th, jitter),
            ll,
            lambda th: log_gamma_prior(th, priors.shape, priors.rate_theta_y),
            config.proposal_l,
            config.proposal_u,
            rng,
        )
        if config.keeps(t):
            kept.append(theta)
    return float(np.mean(kept))


def fit_indep(data, config=None, priors=None):
    """Fit every output independently; each fit uses ``config.seed``."""
    config = config or SamplerConfig()
    x, y = data.x_scaled, data.y_scaled
    thetas = np.array([fit_output(x, y[:, j], config, priors) for j in range(data.q)])
    return IndepGpModel(thetas=thetas, train=data, jitter=config.jitter)


def predict_indep(model, x_star):
    """Plug-in predictive moments; covariances are diagonal."""
    data = model.train
    xs = data.scale_x(x_star)
    x, y = data.x_scaled, data.y_scaled
    m, q = xs.shape[0], model.q
    mean = np.zeros((m, q))
    var = np.zeros((m, q))
    for j, theta in enumerate(model.thetas):
        kf = factor_kernel(x, theta, model.jitter)
        yj = y[:, j : j + 1]
        b_hat = float(kf.inv_quad(yj)[0, 0]) / data.n
        A = kf.whiten(cross_kernel(xs, x, theta).T)
        mean[:, j] = (A.T @ kf.whiten(yj))[:, 0]
        var[:, j] = b_hat * np.maximum(1.0 - np.einsum("ij,ij->j", A, A), 0.0)
    cov = np.zeros((m, q, q))
    idx = np.arange(q)
    cov[:, idx, idx] = var
    cov = np.stack([psd_clip(c) for c in cov]) if m else cov
    return Prediction(mean=data.unscale_y(mean), cov=data.unscale_cov(cov), sample_count=1)


def residual_matrix(x, theta, jitter, xr, xc):
    """Augmented residual variances, reference rows by candidate columns."""
    kf = factor_kernel(x, theta, jitter)
    diag = float(kf.source[0, 0])
    Kr = cross_kernel(xr, x, theta)
    Ar = kf.whiten(Kr.T)
    qr = np.einsum("ij,ij->j", Ar, Ar)
    Kc = cross_kernel(xc, x, theta)
    AcT = kf.solve(Kc.T).T
    v = diag - np.einsum("ij,ij->i", Kc, AcT)
    degenerate = v <= DEGENERACY_FACTOR * (diag - 1.0)
    S = Kr @ AcT.T
    Z = cross_kernel(xr, xc, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = qr[:, None] + (S - Z) ** 2 / v[None, :]
    for j in np.flatnonzero(degenerate):
        try:
            quad[:, j] = direct_quad_form(xr, xc[j], x, theta, jitter)
        except FactorizationError:
            quad[:, j] = math.nan
    return np.maximum(1.0 - quad, 0.0)


def alc_indep(model, candidates, reference, mask=None):
    """Reference-averaged product over outputs of augmented residual variances."""
    data = model.train
    xc = data.scale_x(candidates)
    xr = data.scale_x(reference)
    excluded = excluded_candidates(xc, data.x_scaled)
    mask = excluded if mask is None else (mask | excluded)
    active = np.flatnonzero(~mask)
    scores = np.full(xc.shape[0], math.inf)
    if active.size:
        prod = np.ones((xr.shape[0], active.size))
        for theta in model.thetas:
            prod *= residual_matrix(data.x_scaled, theta, model.jitter, xr, xc[active])
        s = np.sum(prod, axis=0) / xr.shape[0]
        scores[active] = np.where(np.isnan(s), math.inf, s)
    return argmin_result(scores, np.atleast_2d(candidates), mask)
