from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepicmgp.baseline import IndepGpModel, predict_indep
from deepicmgp.errors import ShapeError
from deepicmgp.linalg import factor_kernel
from deepicmgp.predictor import (
    coreg_factor,
    gp_conditional,
    output_conditional,
    predict,
    sample_latent,
    sample_rng,
)


def brute_conditional(Z, M, z_star, theta, jitter):
    def k(a, b):
        return np.exp(-np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2) / theta)

    K = k(Z, Z) + jitter * np.eye(len(Z))
    ks = k(z_star, Z)
    mean = ks @ np.linalg.solve(K, M)
    var = 1 - np.einsum("ij,ji->i", ks, np.linalg.solve(K, ks.T))
    return mean, var


def single(chain, t=0):
    return replace(chain, samples=chain.samples[t : t + 1])


class TestGpConditional:
    @pytest.mark.parametrize("theta", [0.05, 0.3, 1.0])
    def test_matches_brute_force(self, theta):
        rng = np.random.default_rng(0)
        Z, M, zs = rng.random((8, 2)), rng.standard_normal((8, 3)), rng.random((20, 2))
        kf = factor_kernel(Z, theta, 1e-8)
        mean, var = gp_conditional(kf, Z, M, zs, theta)
        bm, bv = brute_conditional(Z, M, zs, theta, 1e-8)
        np.testing.assert_allclose(mean, bm, atol=1e-6)
        np.testing.assert_allclose(var, np.maximum(bv, 0), atol=1e-8)

    def test_interpolates_well_conditioned_design(self):
        Z = np.linspace(0, 1, 6)[:, None]
        M = np.sin(6 * Z)
        kf = factor_kernel(Z, 0.01, 1e-8)
        mean, var = gp_conditional(kf, Z, M, Z, 0.01)
        np.testing.assert_allclose(mean, M, atol=1e-6)
        assert np.all(var < 1e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_variance_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        Z, zs = rng.random((6, 1)), rng.random((10, 1))
        kf = factor_kernel(Z, 0.2, 1e-8)
        _, var = gp_conditional(kf, Z, rng.standard_normal((6, 1)), zs, 0.2)
        assert np.all((var >= 0) & (var <= 1 + 1e-12))


class TestSampleLatent:
    def test_moments(self, forrester_chain, forrester_data):
        s = forrester_chain.samples[-1]
        from deepicmgp.predictor import latent_conditional

        lp = latent_conditional(np.full((20_000, 1), 0.37), s, forrester_data.x_scaled, 1e-8)
        draws = sample_latent(lp, np.random.default_rng(1))
        np.testing.assert_allclose(draws.mean(axis=0), lp.mean[0], atol=0.05)
        expected = lp.cond_var[0] * s.b_hat_w.b_hat
        np.testing.assert_allclose(np.cov(draws.T), expected, atol=0.05 * np.abs(expected).max())

    def test_coreg_factor_square_root(self, forrester_chain):
        B = forrester_chain.samples[0].b_hat_y
        L = coreg_factor(B).lower
        np.testing.assert_allclose(L @ L.T, B.b_hat, atol=1e-12)

    def test_student_needs_dof(self, forrester_chain, forrester_data):
        from deepicmgp.predictor import latent_conditional

        lp = latent_conditional(np.zeros((2, 1)), forrester_chain.samples[0], forrester_data.x_scaled, 1e-8)
        with pytest.raises(ValueError):
            sample_latent(lp, np.random.default_rng(0), dist="student")

    def test_sample_rng_streams(self):
        a = sample_rng(5, 3).random(4)
        np.testing.assert_array_equal(a, np.random.default_rng(5 ^ 3).random(4))


class TestPredict:
    def test_shapes_and_psd(self, forrester_chain, forrester_data):
        xs = np.linspace(0, 1, 17)[:, None]
        p = predict(forrester_chain, xs, forrester_data, 3)
        assert p.mean.shape == (17, 2) and p.cov.shape == (17, 2, 2)
        assert p.sample_count == len(forrester_chain)
        assert np.all(np.linalg.eigvalsh(p.cov) >= -1e-10)
        np.testing.assert_array_equal(p.cov, np.transpose(p.cov, (0, 2, 1)))

    def test_deterministic_given_seed(self, forrester_chain, forrester_data):
        xs = np.linspace(0, 1, 5)[:, None]
        a = predict(forrester_chain, xs, forrester_data, 7)
        b = predict(forrester_chain, xs, forrester_data, 7)
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.cov, b.cov)

    def test_empty_input(self, forrester_chain, forrester_data):
        p = predict(forrester_chain, np.zeros((0, 1)), forrester_data)
        assert p.mean.shape == (0, 2) and p.cov.shape == (0, 2, 2)

    def test_wrong_columns(self, forrester_chain, forrester_data):
        with pytest.raises(ShapeError):
            predict(forrester_chain, np.zeros((3, 2)), forrester_data)

    def test_single_sample_covariance(self, forrester_chain, forrester_data):
        ch = single(forrester_chain)
        s = ch.samples[0]
        xs = np.linspace(0.05, 0.95, 7)[:, None]
        p = predict(ch, xs, forrester_data, latent_mapping="mean")
        from deepicmgp.predictor import latent_conditional

        w = latent_conditional(forrester_data.scale_x(xs), s, forrester_data.x_scaled, 1e-8).mean
        op = output_conditional(w, s, forrester_data.y_scaled, 1e-8)
        expected = op.cond_var[:, None, None] * s.b_hat_y.b_hat
        np.testing.assert_allclose(p.cov, forrester_data.unscale_cov(expected), rtol=1e-9, atol=1e-14)
        np.testing.assert_allclose(p.mean, forrester_data.unscale_y(op.mean), rtol=1e-12)

    def test_student_mapping_runs(self, forrester_chain, forrester_data):
        p = predict(forrester_chain, [[0.3]], forrester_data, latent_dist="student")
        assert np.all(np.isfinite(p.mean))

    def test_shallow_mean_matches_independent_gps(self, forrester_shallow_chain, forrester_data):
        ch = single(forrester_shallow_chain, 5)
        theta = ch.samples[0].theta_y
        xs = np.linspace(0, 1, 100)[:, None]
        deep = predict(ch, xs, forrester_data)
        indep = predict_indep(IndepGpModel(np.array([theta, theta]), forrester_data, 1e-8), xs)
        scale = np.abs(indep.mean).max()
        assert np.max(np.abs(deep.mean - indep.mean)) <= 1e-8 * max(1.0, scale)
