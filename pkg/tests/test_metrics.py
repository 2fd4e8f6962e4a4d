import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deepicmgp.errors import DomainError, ShapeError
from deepicmgp.metrics import crps_gaussian, evaluate, mv_log_score, rmse
from deepicmgp.predictor import Prediction


def pred(mean, cov):
    mean = np.asarray(mean, dtype=float)
    return Prediction(mean=mean, cov=np.asarray(cov, dtype=float), sample_count=1)


class TestRmse:
    def test_perfect(self):
        np.testing.assert_array_equal(rmse(np.ones((4, 2)), np.ones((4, 2))), [0, 0])

    def test_offset(self):
        np.testing.assert_allclose(rmse(np.ones((4, 2)), np.zeros((4, 2))), [1, 1])

    def test_hand_case(self):
        rng = np.random.default_rng(0)
        p, t = rng.random((5, 2)), rng.random((5, 2))
        for j in range(2):
            ref = math.sqrt(sum((p[i, j] - t[i, j]) ** 2 for i in range(5)) / 5)
            assert rmse(p, t)[j] == pytest.approx(ref, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            rmse(np.ones((4, 2)), np.ones((4, 1)))


class TestCrps:
    def test_at_mean(self):
        assert crps_gaussian(0.0, 1.0, 0.0) == pytest.approx(0.233695, abs=1e-6)

    def test_point_mass_limit(self):
        assert crps_gaussian(1.0, 1e-14, 1.0) == pytest.approx(0.0, abs=1e-11)

    @given(st.floats(-5, 5), st.floats(0.01, 10))
    def test_even_in_residual(self, r, sigma):
        assert crps_gaussian(0.0, sigma, r) == pytest.approx(crps_gaussian(0.0, sigma, -r), rel=1e-12)

    @given(st.floats(-5, 5), st.floats(0.01, 10), st.floats(-5, 5))
    def test_non_negative(self, mu, sigma, y):
        assert crps_gaussian(mu, sigma, y) >= -1e-12

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(DomainError):
            crps_gaussian(0.0, 0.0, 1.0)

    def test_monte_carlo_spot(self):
        rng = np.random.default_rng(3)
        x, xp = rng.normal(0.5, 2.0, 200_000), rng.normal(0.5, 2.0, 200_000)
        mc = np.mean(np.abs(x - 1.7)) - 0.5 * np.mean(np.abs(x - xp))
        assert crps_gaussian(0.5, 2.0, 1.7) == pytest.approx(mc, rel=1e-2)


class TestLogScore:
    def test_identity_perfect(self):
        m = np.zeros((4, 2))
        assert mv_log_score(pred(m, np.tile(np.eye(2), (4, 1, 1))), m)[0] == pytest.approx(0, abs=1e-9)

    def test_scalar_e(self):
        m = np.zeros((1, 1))
        assert mv_log_score(pred(m, [[[math.e]]]), m)[0] == pytest.approx(-1.0, abs=1e-9)

    def test_odd_median(self):
        # per-point scores -2, 0, 5 from variances e^2, 1, e^-5
        cov = np.array([[[math.e**2]], [[1.0]], [[math.exp(-5)]]])
        m = np.zeros((3, 1))
        med, scores, skipped = mv_log_score(pred(m, cov), m)
        np.testing.assert_allclose(scores, [-2, 0, 5], atol=1e-6)
        assert med == pytest.approx(0.0, abs=1e-6) and skipped == 0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        m, t = rng.random((7, 2)), rng.random((7, 2))
        A = rng.random((7, 2, 2))
        cov = A @ np.transpose(A, (0, 2, 1)) + 0.1 * np.eye(2)
        perm = rng.permutation(7)
        a = mv_log_score(pred(m, cov), t)[0]
        b = mv_log_score(pred(m[perm], cov[perm]), t[perm])[0]
        assert a == b

    def test_zero_covariance_gets_ridge(self):
        m = np.zeros((1, 2))
        med, _, skipped = mv_log_score(pred(m, np.zeros((1, 2, 2))), m)
        assert skipped == 0 and med == pytest.approx(-2 * math.log(1e-10), rel=1e-6)


def test_report_record_keys():
    m = np.zeros((3, 2))
    rep = evaluate(pred(m, np.tile(np.eye(2), (3, 1, 1))), m + 1, seconds=1.5)
    rec = rep.as_record(seed=4)
    assert list(rec) == ["rmse_1", "rmse_2", "crps_1", "crps_2", "mv_score", "seconds", "seed"]
    assert rec["seconds"] == 1.5 and rec["seed"] == 4
