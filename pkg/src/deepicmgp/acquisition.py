"""Multi-output ALC acquisition.

A candidate is scored by the reference-averaged residual variance of the
output layer after adding the candidate to the design, raised to the
number of outputs (the volume of the predictive covariance up to the
coregionalization factor, which cancels in the argmin). Scores are
averaged over chain samples; each sample maps candidates and reference
points to its own latent space.

The augmented quadratic form is obtained from the unaugmented one with a
partitioned-inverse update:

    k_r^T K_aug^-1 k_r = k_r^T K^-1 k_r + (s - z)^2 / v

with s = k_r^T K^-1 k_c, z = k(w_r, w_c), v = (1 + jitter) - k_c^T K^-1 k_c.
"""

import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import backend
from .data import columns, write_csv
from .errors import DataError, EmptyCandidateError, FactorizationError, ShapeError
from .linalg import cross_kernel, factor_kernel
from .predictor import latent_conditional, resolve_seed, sample_latent, sample_rng

log = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-10
DEGENERACY_FACTOR = 10.0


@dataclass(frozen=True)
class AcquisitionConfig:
    candidates: np.ndarray  # (c, d), natural units
    reference: np.ndarray  # (r, d), natural units
    use_fast_update: bool = True
    latent_mapping: str = "sample"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        r = np.atleast_2d(np.asarray(self.reference, dtype=float))
        if c.shape[0] < 1 or r.shape[0] < 1:
            raise ShapeError("need at least one candidate and one reference point")
        if c.shape[1] != r.shape[1]:
            raise ShapeError("candidates and reference differ in dimension")
        if self.latent_mapping not in ("sample", "mean"):
            raise ValueError("latent_mapping must be 'sample' or 'mean'")
        object.__setattr__(self, "candidates", c)
        object.__setattr__(self, "reference", r)


@dataclass(frozen=True)
class AcquisitionResult:
    scores: np.ndarray
    selected_index: int
    selected_point: np.ndarray
    excluded: np.ndarray = field(default=None)  # boolean mask


@dataclass(frozen=True)
class ConditioningState:
    """Products of K(W)^-1 that every candidate update reuses."""

    w: np.ndarray
    theta: float
    factor: object  # SpdFactor of K(W)
    diag: float  # actual kernel diagonal (1 + jitter, or more after a retry)

    @classmethod
    def build(cls, w, theta, jitter):
        kf = factor_kernel(w, theta, jitter)
        return cls(w=w, theta=float(theta), factor=kf, diag=float(kf.source[0, 0]))

    def quad(self, z):
        """Unaugmented k(z, W) K^-1 k(W, z) for each row of ``z``."""
        A = self.factor.whiten(cross_kernel(z, self.w, self.theta).T)
        return np.einsum("ij,ij->j", A, A)


def fast_variance_update(w_ref, w_new, base):
    """Augmented quadratic form k_r^T K_aug^-1 k_r via the partitioned inverse.

    Returns NaN when the Schur complement v is at or below 10x the jitter,
    in which case the caller must use :func:`direct_quad_form`.
    """
    w_ref = np.atleast_2d(w_ref)
    w_new = np.atleast_2d(w_new)
    kr = cross_kernel(w_ref, base.w, base.theta)[0]
    kc = cross_kernel(w_new, base.w, base.theta)[0]
    a = base.factor.solve(kc)
    v = base.diag - kc @ a
    if v <= DEGENERACY_FACTOR * (base.diag - 1.0):
        return math.nan
    qr = base.quad(w_ref)[0]
    s = kr @ a
    z = cross_kernel(w_ref, w_new, base.theta)[0, 0]
    return qr + (s - z) ** 2 / v


def direct_quad_form(w_ref, w_new, w, theta, jitter):
    """Augmented quadratic form by factorizing the (n+1) x (n+1) kernel matrix."""
    w_aug = np.vstack([w, np.atleast_2d(w_new)])
    kf = factor_kernel(w_aug, theta, jitter)
    A = kf.whiten(cross_kernel(np.atleast_2d(w_ref), w_aug, theta).T)
    return np.einsum("ij,ij->j", A, A)


def _direct_sum(w, wc, wr, theta, jitter, q):
    try:
        quad = direct_quad_form(wr, wc, w, theta, jitter)
    except FactorizationError as exc:
        log.warning("candidate scored +inf: %s", exc)
        return math.inf
    return float(np.sum(np.maximum(1.0 - quad, 0.0) ** q))


def sample_sums(w, theta, jitter, wr, wc, q, use_fast_update=True):
    """Reference-summed residual variances (power q) for each candidate, one sample."""
    state = ConditioningState.build(w, theta, jitter)
    if not use_fast_update:
        return np.array([_direct_sum(w, wc[j], wr, theta, jitter, q) for j in range(len(wc))])
    kf = state.factor
    Kr = cross_kernel(wr, w, theta)
    Ar = kf.whiten(Kr.T)
    qr = np.einsum("ij,ij->j", Ar, Ar)
    Kc = cross_kernel(wc, w, theta)
    AcT = np.ascontiguousarray(kf.solve(Kc.T).T)
    v = state.diag - np.einsum("ij,ij->i", Kc, AcT)
    degenerate = v <= DEGENERACY_FACTOR * (state.diag - 1.0)
    v_safe = np.where(degenerate, 1.0, v)
    sums = backend.alc_sums(
        np.ascontiguousarray(Kr),
        AcT,
        np.ascontiguousarray(qr),
        np.ascontiguousarray(v_safe),
        np.ascontiguousarray(wr),
        np.ascontiguousarray(wc),
        float(theta),
        int(q),
    )
    for j in np.flatnonzero(degenerate):
        sums[j] = _direct_sum(w, wc[j], wr, theta, jitter, q)
    return sums


def excluded_candidates(xc_scaled, x_scaled, tol=DUPLICATE_TOL):
    """Mask of candidates within ``tol`` (scaled distance) of a design row."""
    d2 = backend.sqdist(np.ascontiguousarray(xc_scaled), np.ascontiguousarray(x_scaled))
    return d2.min(axis=1) <= tol * tol


def _latent_pair(chain, train, t, sample, xr, xc, seed, mapping):
    """Latent images of reference rows and candidate rows for sample t."""
    if chain.shallow:
        return xr, xc
    z = np.vstack([xr, xc])
    lp = latent_conditional(z, sample, train.x_scaled, chain.config.jitter)
    if mapping == "mean":
        w = lp.mean
    else:
        # reference rows consume the stream first, then candidate rows
        w = sample_latent(lp, sample_rng(seed, t))
    return w[: len(xr)], w[len(xr):]


def alc_scores(chain, config, train, rng=0, mask=None):
    """ALC score of every candidate (+inf where excluded or degenerate).

    Identical candidate rows receive identical latent draws and hence
    identical scores.
    """
    if len(chain) == 0:
        raise ValueError("chain has no samples")
    seed = resolve_seed(rng)
    xc_all = train.scale_x(config.candidates)
    xr = train.scale_x(config.reference)
    c = xc_all.shape[0]
    if mask is None:
        mask = np.zeros(c, dtype=bool)
    active = np.flatnonzero(~mask)
    scores = np.full(c, math.inf)
    if active.size == 0:
        return scores
    xc_unique, inverse = np.unique(xc_all[active], axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    q = train.q
    jitter = chain.config.jitter
    T, r = len(chain), xr.shape[0]
    per_sample = np.empty((T, xc_unique.shape[0]))
    for t, s in enumerate(chain.samples):
        wr, wc = _latent_pair(chain, train, t, s, xr, xc_unique, seed, config.latent_mapping)
        per_sample[t] = sample_sums(s.w, s.theta_y, jitter, wr, wc, q, config.use_fast_update)
    unique_scores = np.sum(per_sample, axis=0) / (T * r)
    scores[active] = unique_scores[inverse]
    return scores


def alc_score(candidate, chain, config, train, rng=0):
    """ALC score of a single candidate against ``config.reference``."""
    single = AcquisitionConfig(
        candidates=np.atleast_2d(candidate),
        reference=config.reference,
        use_fast_update=config.use_fast_update,
        latent_mapping=config.latent_mapping,
    )
    return float(alc_scores(chain, single, train, rng)[0])


def argmin_result(scores, candidates, excluded):
    finite = np.isfinite(scores)
    if not finite.any():
        raise EmptyCandidateError("no admissible candidate remains")
    best = int(np.argmin(np.where(finite, scores, math.inf)))
    return AcquisitionResult(
        scores=scores,
        selected_index=best,
        selected_point=np.array(candidates[best], dtype=float),
        excluded=excluded,
    )


def select_next(chain, config, train, rng=0):
    """Score all admissible candidates and return the argmin (lowest index on ties)."""
    excluded = excluded_candidates(train.scale_x(config.candidates), train.x_scaled)
    scores = alc_scores(chain, config, train, rng, mask=excluded)
    return argmin_result(scores, config.candidates, excluded)


def integrated_variance(chain, reference, train, rng=0, latent_mapping="sample"):
    """(1/T)(1/r) sum over samples and reference points of (1 - k K^-1 k)^Q."""
    seed = resolve_seed(rng)
    xr = train.scale_x(reference)
    empty = np.zeros((0, train.d))
    total = np.empty(len(chain))
    for t, s in enumerate(chain.samples):
        wr, _ = _latent_pair(chain, train, t, s, xr, empty, seed, latent_mapping)
        state = ConditioningState.build(s.w, s.theta_y, chain.config.jitter)
        total[t] = np.sum(np.maximum(1.0 - state.quad(wr), 0.0) ** train.q)
    return float(np.sum(total) / (len(chain) * xr.shape[0]))


# --------------------------------------------------------------------------
# sequential design


class SimulatorError(RuntimeError):
    """The simulator failed; ``partial`` holds the design gathered so far."""

    def __init__(self, message, partial=None, step=None):
        super().__init__(message)
        self.partial = partial
        self.step = step


@dataclass
class StepRecord:
    step: int
    x: np.ndarray
    score: float
    seconds: float
    acq: str
    metrics: Optional[dict] = None


def step_log_header(d, q, with_metrics):
    head = ["step"] + columns("x", d) + ["score", "seconds", "random"]
    if with_metrics:
        head += columns("rmse", q) + columns("crps", q) + ["mv_score"]
    return head


def write_step_log(path, records, d, q, with_metrics, timing=True):
    """Per-step CSV: step, x_1..x_d, score, seconds, random (0 = ALC pick, 1 = random pick), metrics."""
    rows = []
    for rec in records:
        row = [rec.step, *rec.x, rec.score, rec.seconds if timing else 0.0]
        row.append(0 if rec.acq == "alc" else 1)
        if with_metrics:
            m = rec.metrics or {}
            row += [m.get(f"rmse_{i}", math.nan) for i in range(1, q + 1)]
            row += [m.get(f"crps_{i}", math.nan) for i in range(1, q + 1)]
            row.append(m.get("mv_score", math.nan))
        rows.append(row)
    head = step_log_header(d, q, with_metrics)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(head) + "\n")
        for row in rows:
            fields = []
            for name, v in zip(head, row):
                if name in ("step", "random"):
                    fields.append(str(int(v)))
                else:
                    fields.append("%.16e" % v)
            fh.write(",".join(fields) + "\n")


def save_design(out_dir, data):
    write_csv(os.path.join(out_dir, "x.csv"), columns("x", data.d), data.x)
    write_csv(os.path.join(out_dir, "y.csv"), columns("y", data.q), data.y)


def design_loop(
    simulator,
    steps,
    sampler_config,
    acq_config,
    train,
    model=None,
    acq="alc",
    surrogate="deep",
    test=None,
    out_dir=None,
    timing=True,
):
    """Sequential design: fit, select, evaluate, append; ``steps`` times.

    Step k (1-based) fits with seed ``sampler_config.seed ^ k`` and selects
    with the same seed. With ``acq="random"`` the point is drawn uniformly
    from the admissible candidates and its ALC score is still logged.
    ``surrogate="indep"`` uses the independent-GP baseline.

    Args:
        simulator: callable mapping an (m, d) array of natural inputs to (m, Q).
        test: optional (x_test, y_test) pair for per-step metrics.
        out_dir: when set, the design and step log are rewritten after
            every step so that a failure leaves the partial design on disk.

    Returns:
        (Dataset, list of StepRecord)
    """
    from .baseline import alc_indep, fit_indep, predict_indep
    from .metrics import evaluate
    from .predictor import predict
    from .sampler import run_chain

    if acq not in ("alc", "random"):
        raise ValueError("acq must be 'alc' or 'random'")
    if surrogate not in ("deep", "indep"):
        raise ValueError("surrogate must be 'deep' or 'indep'")
    records = []
    data = train
    base_seed = sampler_config.seed
    for k in range(1, steps + 1):
        t0 = time.perf_counter()
        seed = base_seed ^ k
        cfg = replace(sampler_config, seed=seed)
        excluded = excluded_candidates(data.scale_x(acq_config.candidates), data.x_scaled)
        if surrogate == "deep":
            chain = run_chain(data, cfg, model)
            scorer = lambda mask: alc_scores(chain, acq_config, data, seed, mask=mask)
        else:
            chain = fit_indep(data, cfg)
            scorer = lambda mask: alc_indep(
                chain, acq_config.candidates, acq_config.reference, mask=mask
            ).scores
        if acq == "alc":
            res = argmin_result(scorer(excluded), acq_config.candidates, excluded)
            idx, score = res.selected_index, float(res.scores[res.selected_index])
        else:
            admissible = np.flatnonzero(~excluded)
            if admissible.size == 0:
                raise EmptyCandidateError("no admissible candidate remains")
            idx = int(np.random.default_rng(seed).choice(admissible))
            only = np.ones_like(excluded)
            only[idx] = False
            score = float(scorer(only)[idx])
        x_new = np.array(acq_config.candidates[idx], dtype=float)

        metrics = None
        if test is not None:
            x_test, y_test = test
            pred = predict(chain, x_test, data, seed) if surrogate == "deep" else predict_indep(
                chain, x_test
            )
            metrics = evaluate(pred, y_test).as_record()
        try:
            y_new = np.asarray(simulator(x_new[None, :]), dtype=float).reshape(1, -1)
            if y_new.shape[1] != data.q or not np.all(np.isfinite(y_new)):
                raise DataError("simulator returned malformed output")
        except Exception as exc:
            if out_dir is not None:
                save_design(out_dir, data)
                write_step_log(
                    os.path.join(out_dir, "steps.csv"), records, data.d, data.q, test is not None, timing
                )
            raise SimulatorError(f"simulator failed at step {k}: {exc}", data, k) from exc
        data = data.append(x_new[None, :], y_new)
        records.append(
            StepRecord(
                step=k,
                x=x_new,
                score=score,
                seconds=time.perf_counter() - t0,
                acq=acq,
                metrics=metrics,
            )
        )
        if out_dir is not None:
            save_design(out_dir, data)
            write_step_log(
                os.path.join(out_dir, "steps.csv"), records, data.d, data.q, test is not None, timing
            )
    return data, records
