"""Posterior prediction through the latent and output layers.

For each stored chain sample the test inputs are mapped to the latent
space by drawing from the per-point conditional of the latent layer, then
pushed through the output-layer conditional. Moments are aggregated over
samples with the law of total covariance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .icm import CoregEstimate
from .linalg import SpdFactor, cross_kernel, factor_kernel, psd_clip

LATENT_MAPPINGS = ("sample", "mean")
LATENT_DISTS = ("normal", "student")


@dataclass(frozen=True)
class LayerPredictive:
    """Per-point conditional of one layer: rows of ``mean`` and a shared variance."""

    mean: np.ndarray  # (m, S)
    cond_var: np.ndarray  # (m,)
    coreg: CoregEstimate


@dataclass(frozen=True)
class Prediction:
    mean: np.ndarray  # (m, Q)
    cov: np.ndarray  # (m, Q, Q)
    sample_count: int

    @property
    def var(self):
        return np.diagonal(self.cov, axis1=1, axis2=2).copy()


def gp_conditional(k_factor, Z, M, z_star, theta):
    """Conditional mean k K^-1 M and variance 1 - k K^-1 k^T at each row of ``z_star``.

    ``k_factor`` factorizes the kernel matrix of ``Z`` at ``theta``.
    """
    k = cross_kernel(z_star, Z, theta)
    A = k_factor.whiten(k.T)  # (n, m)
    mean = A.T @ k_factor.whiten(M)
    cond_var = np.maximum(1.0 - np.einsum("ij,ij->j", A, A), 0.0)
    return mean, cond_var


def latent_conditional(x_star, sample, x_train, jitter, k_factor=None):
    """Latent-layer conditional at scaled test inputs ``x_star``."""
    _check_cols(x_star, x_train)
    kf = k_factor if k_factor is not None else factor_kernel(x_train, sample.theta_w, jitter)
    mean, cv = gp_conditional(kf, x_train, sample.w, x_star, sample.theta_w)
    return LayerPredictive(mean=mean, cond_var=cv, coreg=sample.b_hat_w)


def output_conditional(w_star, sample, y_train, jitter, k_factor=None):
    """Output-layer conditional at latent locations ``w_star`` (standardized units)."""
    _check_cols(w_star, sample.w)
    kf = k_factor if k_factor is not None else factor_kernel(sample.w, sample.theta_y, jitter)
    mean, cv = gp_conditional(kf, sample.w, y_train, w_star, sample.theta_y)
    return LayerPredictive(mean=mean, cond_var=cv, coreg=sample.b_hat_y)


def sample_latent(pred, rng, dist="normal", dof=None, b_factor=None):
    """Draw one latent row per point: mean_i + sqrt(cond_var_i) L_B z_i.

    With ``dist="student"`` each row is additionally divided by
    sqrt(g / dof), g ~ chi2(dof), giving a multivariate t with ``dof``
    degrees of freedom.
    """
    if dist not in LATENT_DISTS:
        raise ValueError(f"dist must be one of {LATENT_DISTS}")
    m, width = pred.mean.shape
    L = (b_factor if b_factor is not None else coreg_factor(pred.coreg)).lower
    z = rng.standard_normal((m, width)) @ L.T
    scale = np.sqrt(pred.cond_var)
    if dist == "student":
        if not dof or dof <= 0:
            raise ValueError("student sampling needs positive dof")
        scale = scale / np.sqrt(rng.chisquare(dof, size=m) / dof)
    return pred.mean + scale[:, None] * z


def coreg_factor(coreg):
    """A square root L with L L^T = B_hat (eigen-based, tolerant of rank loss)."""
    B = coreg.b_hat
    vals, vecs = np.linalg.eigh(B)
    vals = np.maximum(vals, 0.0)
    L = vecs * np.sqrt(vals)
    return SpdFactor(source=B, lower=L, log_det=float(np.sum(np.log(np.maximum(vals, 1e-300)))))


def sample_rng(seed, index):
    return np.random.default_rng(int(seed) ^ int(index))


def resolve_seed(rng):
    """Accept an integer seed or a Generator; return an integer base seed."""
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return int(rng)


def latent_images(chain, train, x_scaled, seed, mapping="sample", dist="normal"):
    """Latent locations of ``x_scaled`` under each chain sample (a list of arrays)."""
    out = []
    jitter = chain.config.jitter
    xt = train.x_scaled
    for t, s in enumerate(chain.samples):
        if chain.shallow:
            out.append(x_scaled)
            continue
        lp = latent_conditional(x_scaled, s, xt, jitter)
        if mapping == "mean":
            out.append(lp.mean)
        else:
            out.append(sample_latent(lp, sample_rng(seed, t), dist=dist, dof=train.n))
    return out


def predict(chain, x_star, train, rng=0, latent_mapping="sample", latent_dist="normal"):
    """Posterior predictive mean and covariance at natural-unit inputs ``x_star``.

    Args:
        chain: fitted :class:`~deepicmgp.sampler.Chain`.
        x_star: (m, d) test inputs in natural units.
        train: the training :class:`~deepicmgp.data.Dataset` of the chain.
        rng: integer seed or Generator; sample t uses the stream ``seed ^ t``.
        latent_mapping: "sample" draws latent test locations, "mean" uses
            the latent conditional mean.
        latent_dist: "normal" or "student" (n degrees of freedom).

    Returns:
        Prediction in natural output units.
    """
    if len(chain) == 0:
        raise ValueError("chain has no samples")
    if latent_mapping not in LATENT_MAPPINGS:
        raise ValueError(f"latent_mapping must be one of {LATENT_MAPPINGS}")
    xs = train.scale_x(x_star)
    m, q = xs.shape[0], train.q
    if m == 0:
        return Prediction(mean=np.zeros((0, q)), cov=np.zeros((0, q, q)), sample_count=len(chain))
    seed = resolve_seed(rng)
    jitter = chain.config.jitter
    y = train.y_scaled
    ws = latent_images(chain, train, xs, seed, latent_mapping, latent_dist)

    T = len(chain)
    means = np.empty((T, m, q))
    within = np.zeros((m, q, q))
    for t, (s, w_star) in enumerate(zip(chain.samples, ws)):
        op = output_conditional(w_star, s, y, jitter)
        means[t] = op.mean
        within += op.cond_var[:, None, None] * s.b_hat_y.b_hat
    mu = means.mean(axis=0)
    dev = means - mu
    spread = np.einsum("tia,tib->iab", dev, dev) / T
    cov = within / T + spread
    cov = np.stack([psd_clip(c) for c in cov])
    return Prediction(mean=train.unscale_y(mu), cov=train.unscale_cov(cov), sample_count=T)


def _check_cols(a, b):
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"expected {b.shape[1]} columns, got {a.shape[1]}")
