import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepicmgp.acquisition import (
    AcquisitionConfig,
    ConditioningState,
    alc_score,
    alc_scores,
    direct_quad_form,
    excluded_candidates,
    fast_variance_update,
    integrated_variance,
    sample_sums,
    select_next,
)
from deepicmgp.errors import EmptyCandidateError, ShapeError
from deepicmgp.icm import CoregEstimate


@pytest.fixture(scope="module")
def acq_config():
    return AcquisitionConfig(
        candidates=np.linspace(0, 1, 41)[:, None], reference=np.linspace(0.01, 0.99, 30)[:, None]
    )


def scaled_b_y(chain, factor):
    samples = tuple(
        replace(s, b_hat_y=CoregEstimate(s.b_hat_y.b_hat * factor, s.b_hat_y.sample_size))
        for s in chain.samples
    )
    return replace(chain, samples=samples)


class TestVarianceUpdate:
    def test_fast_equals_direct(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(100):
            w = rng.random((10, 2))
            base = ConditioningState.build(w, 0.3, 1e-8)
            wr, wc = rng.random(2), rng.random(2)
            fast = fast_variance_update(wr, wc, base)
            direct = direct_quad_form(wr, wc, w, 0.3, 1e-8)[0]
            worst = max(worst, abs(fast - direct))
        assert worst < 1e-8

    def test_degenerate_candidate_flagged(self):
        w = np.random.default_rng(1).random((6, 1))
        base = ConditioningState.build(w, 0.5, 1e-8)
        assert math.isnan(fast_variance_update([[0.5]], w[2], base))

    def test_reference_at_candidate_has_zero_residual(self):
        w = np.random.default_rng(2).random((6, 1))
        base = ConditioningState.build(w, 0.2, 1e-8)
        assert 1 - fast_variance_update([[0.123]], [[0.123]], base) == pytest.approx(0, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_sample_sums_fast_matches_direct(self, seed, q):
        rng = np.random.default_rng(seed)
        w, wr, wc = rng.random((8, 2)), rng.random((5, 2)), rng.random((6, 2))
        fast = sample_sums(w, 0.4, 1e-8, wr, wc, q, True)
        slow = sample_sums(w, 0.4, 1e-8, wr, wc, q, False)
        np.testing.assert_allclose(fast, slow, atol=1e-8)


class TestScores:
    def test_coreg_invariance_bitwise(self, forrester_chain, forrester_data, acq_config):
        a = select_next(forrester_chain, acq_config, forrester_data, 4)
        b = select_next(scaled_b_y(forrester_chain, 7.0), acq_config, forrester_data, 4)
        np.testing.assert_array_equal(a.scores, b.scores)
        assert a.selected_index == b.selected_index

    def test_design_points_excluded(self, forrester_chain, forrester_data):
        cands = np.vstack([forrester_data.x[:3], [[0.52]]])
        cfg = AcquisitionConfig(candidates=cands, reference=[[0.2], [0.8]])
        res = select_next(forrester_chain, cfg, forrester_data)
        assert res.excluded[:3].all() and not res.excluded[3]
        assert np.all(np.isinf(res.scores[:3]))
        assert res.selected_index == 3

    def test_all_excluded(self, forrester_chain, forrester_data):
        cfg = AcquisitionConfig(candidates=forrester_data.x[:2], reference=[[0.5]])
        with pytest.raises(EmptyCandidateError):
            select_next(forrester_chain, cfg, forrester_data)

    def test_duplicated_candidates_score_identically(self, forrester_chain, forrester_data, acq_config):
        cands = np.vstack([acq_config.candidates, acq_config.candidates[[3, 17]]])
        cfg = replace(acq_config, candidates=cands)
        scores = alc_scores(forrester_chain, cfg, forrester_data, 2)
        assert scores[-2] == scores[3] and scores[-1] == scores[17]

    def test_scores_bounded_by_integrated_variance(self, forrester_chain, forrester_data, acq_config):
        scores = alc_scores(forrester_chain, acq_config, forrester_data, 5)
        base = integrated_variance(forrester_chain, acq_config.reference, forrester_data, 5)
        assert np.all(scores[np.isfinite(scores)] <= base + 1e-12)

    def test_fast_and_direct_paths_agree(self, forrester_chain, forrester_data, acq_config):
        small = replace(forrester_chain, samples=forrester_chain.samples[:5])
        a = alc_scores(small, acq_config, forrester_data, 1)
        b = alc_scores(small, replace(acq_config, use_fast_update=False), forrester_data, 1)
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_single_candidate_helper(self, forrester_chain, forrester_data, acq_config):
        x = acq_config.candidates[:1]
        cfg = replace(acq_config, candidates=x)
        assert alc_score(x, forrester_chain, acq_config, forrester_data, 0) == alc_scores(
            forrester_chain, cfg, forrester_data, 0
        )[0]

    def test_mean_mapping(self, forrester_chain, forrester_data, acq_config):
        cfg = replace(acq_config, latent_mapping="mean")
        scores = alc_scores(forrester_chain, cfg, forrester_data)
        assert np.all(scores >= 0)


def test_excluded_tolerance():
    x = np.array([[0.5, 0.5]])
    c = np.array([[0.5, 0.5 + 1e-12], [0.5, 0.5 + 1e-6]])
    np.testing.assert_array_equal(excluded_candidates(c, x), [True, False])


def test_config_validation():
    with pytest.raises(ShapeError):
        AcquisitionConfig(candidates=np.zeros((3, 2)), reference=np.zeros((3, 1)))
    with pytest.raises(ValueError):
        AcquisitionConfig(candidates=[[0.0]], reference=[[0.0]], latent_mapping="median")
