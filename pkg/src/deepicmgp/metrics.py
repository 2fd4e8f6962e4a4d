"""Scoring rules for multi-output probabilistic predictions."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ShapeError
from .linalg import psd_clip

SIGMA_FLOOR = 1e-12
COV_RIDGE = 1e-10
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MetricReport:
    rmse: np.ndarray
    crps: np.ndarray
    mv_score: float
    per_point_scores: np.ndarray
    wall_clock_seconds: float = 0.0
    skipped_points: int = 0
    extra: dict = field(default_factory=dict)

    def as_record(self, seed=None):
        """Flat dict with keys rmse_i, crps_i, mv_score, seconds, seed."""
        rec = {}
        for i, v in enumerate(self.rmse, 1):
            rec[f"rmse_{i}"] = float(v)
        for i, v in enumerate(self.crps, 1):
            rec[f"crps_{i}"] = float(v)
        rec["mv_score"] = float(self.mv_score)
        rec["seconds"] = float(self.wall_clock_seconds)
        rec["seed"] = seed
        return rec


def _pair(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def rmse(pred_mean, truth):
    """Root mean squared error of each output column."""
    p, t = _pair(pred_mean, truth)
    return np.sqrt(np.mean((p - t) ** 2, axis=0))


def crps_gaussian(mu, sigma, y):
    """CRPS of N(mu, sigma^2) at y (lower is better). Vectorizes over arrays.

    sigma * [z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)] with z = (y - mu) / sigma
    and sigma floored at 1e-12.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise DomainError("sigma must be positive")
    sigma = np.maximum(sigma, SIGMA_FLOOR)
    z = (np.asarray(y, dtype=float) - np.asarray(mu, dtype=float)) / sigma
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = sigma * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * pdf - _INV_SQRT_PI)
    return out if out.ndim else float(out)


def crps_per_output(pred_mean, pred_var, truth):
    """Mean Gaussian CRPS of each output column; variances are floored at 0."""
    p, t = _pair(pred_mean, truth)
    v = np.broadcast_to(np.asarray(pred_var, dtype=float), p.shape)
    sigma = np.maximum(np.sqrt(np.maximum(v, 0.0)), SIGMA_FLOOR)
    return np.mean(crps_gaussian(p, sigma, t), axis=0)


def point_log_scores(mean, cov, truth):
    """-log|S_i| - r_i^T S_i^-1 r_i per point; NaN where S_i is unusable."""
    mean, truth = _pair(mean, truth)
    cov = np.asarray(cov, dtype=float)
    m, q = mean.shape
    if cov.shape != (m, q, q):
        raise ShapeError(f"expected covariances of shape {(m, q, q)}, got {cov.shape}")
    out = np.full(m, np.nan)
    eye = np.eye(q)
    for i in range(m):
        S = psd_clip(cov[i]) + COV_RIDGE * eye
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            continue
        r = np.linalg.solve(L, truth[i] - mean[i])
        out[i] = -2.0 * np.sum(np.log(np.diag(L))) - r @ r
    return out


def mv_log_score(pred, truth):
    """Median multivariate log score (higher is better).

    Returns:
        (median, per_point_scores, skipped) where skipped counts points whose
        covariance could not be factorized and which were left out.
    """
    scores = point_log_scores(pred.mean, pred.cov, truth)
    ok = np.isfinite(scores)
    skipped = int(np.count_nonzero(~ok))
    median = float(np.median(scores[ok])) if ok.any() else math.nan
    return median, scores, skipped


def evaluate(pred, truth, seconds=0.0):
    """Full :class:`MetricReport` for a :class:`~deepicmgp.predictor.Prediction`."""
    median, scores, skipped = mv_log_score(pred, truth)
    return MetricReport(
        rmse=rmse(pred.mean, truth),
        crps=crps_per_output(pred.mean, pred.var, truth),
        mv_score=median,
        per_point_scores=scores,
        wall_clock_seconds=float(seconds),
        skipped_points=skipped,
    )
