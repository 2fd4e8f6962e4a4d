import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepicmgp.doe import grid, maximin_lhd, min_sqdist, random_lhd, rescale, uniform_random
from deepicmgp.errors import DomainError, ShapeError


def is_latin(P):
    n = P.shape[0]
    strata = np.floor(P * n).astype(int)
    return all(sorted(strata[:, j]) == list(range(n)) for j in range(P.shape[1]))


class TestMaximinLhd:
    def test_singleton(self):
        D = maximin_lhd(1, 3)
        assert D.points.shape == (1, 3) and D.kind == "maximin_lhd"

    def test_two_points_one_dim(self):
        P = np.sort(maximin_lhd(2, 1).points[:, 0])
        assert P[0] < 0.5 <= P[1]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 30), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_latin_property(self, n, d, seed):
        P = maximin_lhd(n, d, optimize_iters=300, seed=seed).points
        assert is_latin(P)
        assert np.all((P >= 0) & (P <= 1))

    def test_never_worse_than_start(self):
        for seed in range(100):
            start = random_lhd(10, 2, np.random.default_rng(seed))
            opt = maximin_lhd(10, 2, optimize_iters=2000, seed=seed).points
            assert min_sqdist(opt) >= min_sqdist(start)

    def test_seeded(self):
        np.testing.assert_array_equal(maximin_lhd(8, 2, seed=3).points, maximin_lhd(8, 2, seed=3).points)

    def test_bad_sizes(self):
        with pytest.raises(DomainError):
            maximin_lhd(0, 2)


class TestGrid:
    def test_twenty_by_twenty(self):
        assert grid(20, 2).n == 400

    def test_endpoints(self):
        np.testing.assert_array_equal(grid(2, 1).points[:, 0], [0.0, 1.0])

    def test_contains_center(self):
        P = grid(3, 2).points
        assert P.shape == (9, 2)
        assert any(np.array_equal(p, [0.5, 0.5]) for p in P)

    def test_too_large(self):
        with pytest.raises(ShapeError):
            grid(11, 6)


class TestRescale:
    def test_branin_box(self):
        lo, hi = [-5.0, 0.0], [10.0, 15.0]
        out = rescale(grid(20, 2), lo, hi)
        assert out.min(axis=0).tolist() == lo and out.max(axis=0).tolist() == hi

    def test_midpoint(self):
        assert rescale(np.array([[0.5]]), [-5.0], [10.0])[0, 0] == 2.5

    def test_bad_bounds(self):
        with pytest.raises(DomainError):
            rescale(np.array([[0.5]]), [1.0], [1.0])
        with pytest.raises(ShapeError):
            rescale(np.array([[0.5]]), [0.0, 0.0], [1.0, 1.0])


def test_uniform_random_in_cube():
    D = uniform_random(50, 3, seed=1)
    assert D.kind == "uniform_random" and np.all((D.points >= 0) & (D.points < 1))
