"""Gibbs sampler over (theta_w, theta_y, W) for the two-layer model.

Each sweep performs a sliding-window Metropolis-Hastings update of the
latent-layer lengthscale, then of the output-layer lengthscale, then one
elliptical slice sampling update of the whole latent matrix W.

The generic moves :func:`mh_step` and :func:`ess_step` accept arbitrary
log-likelihood callables so that they can be tested against flat or
conjugate likelihoods.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import DegenerateLikelihoodError, DomainError, FactorizationError
from .icm import CoregEstimate, PriorSpec, gls_coreg, layer_log_marginal, log_gamma_prior
from .linalg import DEFAULT_JITTER, factor_kernel, spd_factorize

log = logging.getLogger(__name__)

_LIKELIHOOD_ERRORS = (FactorizationError, DegenerateLikelihoodError)


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 5000
    burn_in: int = 1000
    thinning: int = 2
    proposal_l: float = 1.0
    proposal_u: float = 2.0
    seed: int = 0
    jitter: float = DEFAULT_JITTER
    ess_max_shrinks: int = 100

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise DomainError("need 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise DomainError("thinning must be at least 1")
        if not 0 < self.proposal_l <= self.proposal_u:
            raise DomainError("need 0 < proposal_l <= proposal_u")
        if self.jitter < 0:
            raise DomainError("jitter must be non-negative")
        if self.ess_max_shrinks < 0:
            raise DomainError("ess_max_shrinks must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")

    @property
    def n_samples(self):
        return (self.iterations - self.burn_in) // self.thinning

    def keeps(self, t):
        """Whether the state after sweep ``t`` (0-based) is stored."""
        return t >= self.burn_in and (t - self.burn_in + 1) % self.thinning == 0


@dataclass(frozen=True)
class ModelSpec:
    """Layer structure. ``layers=1`` is the shallow ICM with W fixed to the inputs."""

    layers: int = 2
    latent_dim: Optional[int] = None
    priors: PriorSpec = field(default_factory=PriorSpec)

    def __post_init__(self):
        if self.layers not in (1, 2):
            raise DomainError("layers must be 1 or 2")
        if self.latent_dim is not None and self.latent_dim < 1:
            raise DomainError("latent_dim must be positive")

    def width(self, d, q):
        if self.layers == 1:
            return d
        return self.latent_dim if self.latent_dim is not None else max(d, q)


@dataclass(frozen=True)
class ChainSample:
    theta_w: float  # NaN for the shallow model
    theta_y: float
    w: np.ndarray
    b_hat_w: Optional[CoregEstimate]
    b_hat_y: CoregEstimate


@dataclass(frozen=True)
class ChainMeta:
    n: int
    d: int
    q: int
    latent_dim: int
    layers: int
    x_bounds: np.ndarray
    y_center: np.ndarray
    y_scale: np.ndarray


@dataclass(frozen=True)
class Chain:
    samples: tuple
    config: SamplerConfig
    model: ModelSpec
    meta: ChainMeta
    acceptance: dict

    def __len__(self):
        return len(self.samples)

    @property
    def shallow(self):
        return self.model.layers == 1


# --------------------------------------------------------------------------
# generic moves


def propose_lengthscale(theta_prev, l, u, rng):
    """Uniform draw on [l * theta_prev / u, u * theta_prev / l]."""
    return rng.uniform(theta_prev * (l / u), theta_prev * (u / l))


def mh_step(theta, loglik_fn, current_ll, log_prior_fn, l, u, rng):
    """One sliding-window MH update of a positive scalar.

    A failing likelihood evaluation at the proposal counts as a rejection.

    Returns:
        (theta, loglik, accepted)
    """
    proposal = propose_lengthscale(theta, l, u, rng)
    threshold = rng.random()
    try:
        prop_ll = loglik_fn(proposal)
    except _LIKELIHOOD_ERRORS as exc:
        log.debug("rejecting theta=%g: %s", proposal, exc)
        return theta, current_ll, False
    log_ratio = (
        prop_ll
        + log_prior_fn(proposal)
        - current_ll
        - log_prior_fn(theta)
        + math.log(theta / proposal)
    )
    if threshold < math.exp(min(0.0, log_ratio)):
        return proposal, prop_ll, True
    return theta, current_ll, False


def draw_matrix_normal_prior(k_factor, b_factor, rng):
    """L_K Z L_B^T with Z standard normal; vec has covariance B kron K."""
    Z = rng.standard_normal((k_factor.size, b_factor.size))
    return k_factor.lower @ Z @ b_factor.lower.T


def ess_step(w, w_prior, loglik_fn, current_ll, rng, max_shrinks=100, trace=None):
    """One elliptical slice sampling update.

    Proposals ``w cos(g) + w_prior sin(g)`` are accepted when their
    log-likelihood exceeds ``current_ll + log(U)``. The angle bracket
    starts at (g - 2 pi, g) and shrinks toward zero after each rejection.
    After ``max_shrinks`` shrinks the current state is returned unchanged.

    Args:
        trace: optional list; each proposed angle's bracket width is appended.

    Returns:
        (w, loglik, shrinks)
    """
    log_threshold = current_ll + math.log(rng.random())
    gamma = rng.uniform(0.0, 2.0 * math.pi)
    lo, hi = gamma - 2.0 * math.pi, gamma
    shrinks = 0
    while True:
        if trace is not None:
            trace.append(hi - lo)
        proposal = w * math.cos(gamma) + w_prior * math.sin(gamma)
        try:
            prop_ll = loglik_fn(proposal)
        except _LIKELIHOOD_ERRORS:
            prop_ll = -math.inf
        if prop_ll > log_threshold:
            return proposal, prop_ll, shrinks
        if shrinks >= max_shrinks:
            return w, current_ll, shrinks
        if gamma < 0.0:
            lo = gamma
        else:
            hi = gamma
        gamma = rng.uniform(lo, hi)
        shrinks += 1


# --------------------------------------------------------------------------
# model-specific moves


@dataclass(frozen=True)
class ChainState:
    theta_w: float
    theta_y: float
    w: np.ndarray
    ll_y: float  # log L(Y | W, theta_y) at the current state


@dataclass(frozen=True)
class SamplerContext:
    x: np.ndarray  # scaled inputs
    y: np.ndarray  # standardized outputs
    priors: PriorSpec
    config: SamplerConfig


def latent_loglik(ctx, w, theta_w):
    return layer_log_marginal(ctx.x, w, theta_w, ctx.config.jitter)


def output_loglik(ctx, w, theta_y):
    return layer_log_marginal(w, ctx.y, theta_y, ctx.config.jitter)


def mh_step_theta_w(state, ctx, rng, iteration=None):
    """MH update of theta_w against L(W | X, theta_w). Returns (state, accepted)."""
    cfg, pri = ctx.config, ctx.priors
    try:
        current = latent_loglik(ctx, state.w, state.theta_w)
    except _LIKELIHOOD_ERRORS as exc:
        raise DegenerateLikelihoodError(
            f"latent-layer likelihood failed at the current state: {exc}", iteration
        ) from exc
    theta, _, accepted = mh_step(
        state.theta_w,
        lambda t: latent_loglik(ctx, state.w, t),
        current,
        lambda t: log_gamma_prior(t, pri.shape, pri.rate_theta_w),
        cfg.proposal_l,
        cfg.proposal_u,
        rng,
    )
    return replace(state, theta_w=theta), accepted


def mh_step_theta_y(state, ctx, rng, iteration=None):
    """MH update of theta_y against L(Y | W, theta_y). Returns (state, accepted)."""
    cfg, pri = ctx.config, ctx.priors
    theta, ll, accepted = mh_step(
        state.theta_y,
        lambda t: output_loglik(ctx, state.w, t),
        state.ll_y,
        lambda t: log_gamma_prior(t, pri.shape, pri.rate_theta_y),
        cfg.proposal_l,
        cfg.proposal_u,
        rng,
    )
    return replace(state, theta_y=theta, ll_y=ll), accepted


def ess_step_w(state, ctx, rng, max_shrinks=None, iteration=None):
    """ESS update of W with prior N(0, B_hat_w kron K_theta_w(X)).

    B_hat_w is the plug-in estimate at the current W and stays fixed
    across the shrink loop. Because B_hat_w follows W, its smallest
    eigenvalue can drift toward zero; a failed factorization is retried
    once with 100x jitter on the diagonal. Returns (state, shrinks).
    """
    if max_shrinks is None:
        max_shrinks = ctx.config.ess_max_shrinks
    try:
        kf = factor_kernel(ctx.x, state.theta_w, ctx.config.jitter)
        bf = spd_factorize(gls_coreg(state.w, kf).b_hat, retry_jitter=100.0 * ctx.config.jitter)
    except FactorizationError as exc:
        raise DegenerateLikelihoodError(f"latent prior is singular: {exc}", iteration) from exc
    w_prior = draw_matrix_normal_prior(kf, bf, rng)
    w, ll, shrinks = ess_step(
        state.w,
        w_prior,
        lambda m: output_loglik(ctx, m, state.theta_y),
        state.ll_y,
        rng,
        max_shrinks,
    )
    return replace(state, w=w, ll_y=ll), shrinks


# --------------------------------------------------------------------------
# driver


def initial_latent(x, width):
    """Starting W: standardized powers of the input columns.

    Column j is ``x[:, j % d] ** (1 + j // d)`` standardized to zero mean
    and unit variance, so repeated input columns stay linearly independent
    when the latent width exceeds d.
    """
    n, d = x.shape
    w = np.empty((n, width))
    for j in range(width):
        col = x[:, j % d] ** (1 + j // d)
        col = col - col.mean()
        sd = col.std()
        w[:, j] = col / sd if sd > 0 else col
    return w


def plug_in_estimates(x, y, w, theta_w, theta_y, jitter, layers=2):
    """B_hat_w and B_hat_y at a stored state (B_hat_w is None when shallow)."""
    b_w = None
    if layers == 2:
        b_w = gls_coreg(w, factor_kernel(x, theta_w, jitter))
    b_y = gls_coreg(y, factor_kernel(w, theta_y, jitter))
    return b_w, b_y


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def run_chain(data, config=None, model=None):
    """Run the sampler on a :class:`Dataset` and return the thinned chain.

    Raises:
        DegenerateLikelihoodError: the likelihood cannot be evaluated at the
            current state; ``iteration`` holds the 0-based sweep index.
    """
    config = config or SamplerConfig()
    model = model or ModelSpec()
    if not isinstance(data, Dataset):
        raise TypeError("data must be a Dataset")
    x, y = data.x_scaled, data.y_scaled
    n, d, q = data.n, data.d, data.q
    width = model.width(d, q)
    if n <= max(d, width, q):
        raise DegenerateLikelihoodError(f"need n > max(d, D, Q); got n={n}, d={d}, D={width}, Q={q}")

    rng = np.random.default_rng(config.seed)
    ctx = SamplerContext(x=x, y=y, priors=model.priors, config=config)
    shallow = model.layers == 1
    w0 = x.copy() if shallow else initial_latent(x, width)
    theta_w0 = math.nan if shallow else model.priors.mean_theta_w
    theta_y0 = model.priors.mean_theta_y
    try:
        ll_y = output_loglik(ctx, w0, theta_y0)
    except _LIKELIHOOD_ERRORS as exc:
        raise DegenerateLikelihoodError(f"initial state is degenerate: {exc}", 0) from exc
    state = ChainState(theta_w=theta_w0, theta_y=theta_y0, w=w0, ll_y=ll_y)

    acc_w = acc_y = 0
    shrink_total = 0
    samples = []
    for t in range(config.iterations):
        if not shallow:
            state, ok = mh_step_theta_w(state, ctx, rng, iteration=t)
            acc_w += ok
        state, ok = mh_step_theta_y(state, ctx, rng, iteration=t)
        acc_y += ok
        if not shallow:
            state, shrinks = ess_step_w(state, ctx, rng, iteration=t)
            shrink_total += shrinks
        if config.keeps(t):
            samples.append(_make_sample(x, y, state, config.jitter, model.layers, t))

    iters = config.iterations
    acceptance = {
        "theta_w": math.nan if shallow else acc_w / iters,
        "theta_y": acc_y / iters,
        "ess_mean_shrinks": math.nan if shallow else shrink_total / iters,
    }
    log.info("chain finished: %s", acceptance)
    meta = ChainMeta(
        n=n,
        d=d,
        q=q,
        latent_dim=width,
        layers=model.layers,
        x_bounds=data.x_bounds,
        y_center=data.y_center,
        y_scale=data.y_scale,
    )
    return Chain(
        samples=tuple(samples), config=config, model=model, meta=meta, acceptance=acceptance
    )


def _make_sample(x, y, state, jitter, layers, t):
    w = _frozen(state.w)
    try:
        b_w, b_y = plug_in_estimates(x, y, w, state.theta_w, state.theta_y, jitter, layers)
    except FactorizationError as exc:
        raise DegenerateLikelihoodError(f"plug-in estimate failed: {exc}", t) from exc
    return ChainSample(
        theta_w=float(state.theta_w), theta_y=float(state.theta_y), w=w, b_hat_w=b_w, b_hat_y=b_y
    )

