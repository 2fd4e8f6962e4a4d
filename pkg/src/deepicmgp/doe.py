"""Space-filling designs on the unit hypercube."""

import itertools
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DomainError, ShapeError

MAX_GRID_POINTS = 10**6
DEFAULT_LHD_ITERS = 10_000


@dataclass(frozen=True)
class Design:
    points: np.ndarray
    kind: str  # "maximin_lhd", "grid" or "uniform_random"
    seed: int = 0

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def min_sqdist(P):
    """Smallest pairwise squared distance between rows (inf for n < 2)."""
    P = np.ascontiguousarray(P, dtype=float)
    if P.shape[0] < 2:
        return np.inf
    D = backend.sqdist(P, P)
    np.fill_diagonal(D, np.inf)
    return float(D.min())


def random_lhd(n, d, rng):
    """Latin hypercube with points at stratum midpoints (k + 0.5) / n."""
    cols = [rng.permutation(n) for _ in range(d)]
    return (np.column_stack(cols) + 0.5) / n


def maximin_lhd(n, d, optimize_iters=DEFAULT_LHD_ITERS, seed=0, rng=None):
    """Maximin Latin hypercube by greedy coordinate swaps.

    Each proposal swaps one coordinate between two rows, which keeps the
    Latin property, and is kept when the minimum pairwise distance does
    not decrease.
    """
    if n < 1 or d < 1:
        raise DomainError("n and d must be positive")
    if optimize_iters < 0:
        raise DomainError("optimize_iters must be non-negative")
    rng = rng if rng is not None else np.random.default_rng(seed)
    P = random_lhd(n, d, rng)
    if n >= 2 and optimize_iters:
        dims = rng.integers(0, d, size=optimize_iters).astype(np.int64)
        a = rng.integers(0, n, size=optimize_iters)
        # b uniform over rows other than a
        b = (a + rng.integers(1, n, size=optimize_iters)) % n
        P, _ = backend.lhd_swaps(P, dims, a.astype(np.int64), b.astype(np.int64))
    P.setflags(write=False)
    return Design(points=P, kind="maximin_lhd", seed=int(seed))


def grid(points_per_dim, d):
    """Full factorial grid including the endpoints 0 and 1."""
    if points_per_dim < 2:
        raise DomainError("points_per_dim must be at least 2")
    if d < 1:
        raise DomainError("d must be positive")
    if points_per_dim**d > MAX_GRID_POINTS:
        raise ShapeError(f"grid would have {points_per_dim ** d} points (limit {MAX_GRID_POINTS})")
    axis = np.linspace(0.0, 1.0, points_per_dim)
    P = np.array(list(itertools.product(axis, repeat=d)), dtype=float)
    P.setflags(write=False)
    return Design(points=P, kind="grid")


def uniform_random(n, d, seed=0):
    P = np.random.default_rng(seed).random((n, d))
    P.setflags(write=False)
    return Design(points=P, kind="uniform_random", seed=int(seed))


def rescale(design, lower, upper):
    """Affine map of unit-cube points to the box [lower, upper]."""
    P = design.points if isinstance(design, Design) else np.atleast_2d(design)
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    if lower.shape != upper.shape or lower.size != P.shape[1]:
        raise ShapeError("bounds must have one entry per dimension")
    if np.any(lower >= upper):
        raise DomainError("need lower < upper in every dimension")
    out = lower + P * (upper - lower)
    # land exactly on the bounds at the unit endpoints
    out = np.where(P == 1.0, upper, out)
    return out
