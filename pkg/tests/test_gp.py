import numpy as np
import pytest

from powercast.errors import GpFitError
from powercast.gp import gp_fit, gp_predict, matern52


class TestFit:
    def test_single_observation_interpolates(self):
        s = gp_fit(np.array([[0.3]]), np.array([1.7]), noise=0.0)
        mean, var = gp_predict(s, np.array([0.3]))
        assert mean == pytest.approx(1.7, abs=1e-9)
        assert var <= 1e-9

    def test_conflicting_duplicates_rejected_at_zero_noise(self):
        with pytest.raises(GpFitError):
            gp_fit(np.array([[0.4], [0.4]]), np.array([1.0, 2.0]), noise=0.0)

    def test_consistent_duplicates_allowed(self):
        s = gp_fit(np.array([[0.4], [0.4]]), np.array([1.0, 1.0]), noise=1e-6)
        mean, _ = gp_predict(s, np.array([0.4]))
        assert mean == pytest.approx(1.0, abs=1e-3)

    def test_smooth_function_interpolation(self):
        x = np.linspace(0.05, 0.95, 5)[:, None]
        y = np.sin(4.0 * x[:, 0])
        s = gp_fit(x, y, noise=1e-8)
        mean, _ = gp_predict(s, x)
        # Direct linear-solve oracle on the selected hyperparameters.
        k = matern52(x, x, s.length_scales, s.signal_variance) + 1e-8 * np.eye(5)
        oracle = s.prior_mean + matern52(x, x, s.length_scales, s.signal_variance) @ (
            np.linalg.solve(k, y - s.prior_mean)
        )
        assert np.max(np.abs(mean - y)) < 1e-6
        assert np.max(np.abs(mean - oracle)) < 1e-9

    def test_points_outside_cube_rejected(self):
        with pytest.raises(GpFitError):
            gp_fit(np.array([[1.4]]), np.array([0.0]))


class TestPredict:
    def test_training_point_zero_noise(self):
        x = np.array([[0.2], [0.8]])
        y = np.array([1.0, -1.0])
        s = gp_fit(x, y, noise=0.0)
        for i in range(2):
            mean, var = gp_predict(s, x[i])
            assert mean == pytest.approx(y[i], abs=1e-8)
            assert var <= 1e-9

    def test_far_query_reverts_to_prior(self):
        s = gp_fit(
            np.array([[0.0, 0.0]]),
            np.array([2.0]),
            signal_variance=1.7,
            length_scale=0.05,
            noise=0.0,
        )
        mean, var = gp_predict(s, np.array([1.0, 1.0]))  # 28 length scales away
        assert mean == pytest.approx(s.prior_mean, rel=0.01)
        assert var == pytest.approx(1.7, rel=0.01)

    def test_matches_naive_inverse(self, rng):
        x = rng.random((3, 2))
        y = rng.normal(size=3)
        s = gp_fit(x, y, signal_variance=1.3, length_scale=0.3, noise=1e-6)
        q = rng.random((4, 2))
        k_train = matern52(x, x, s.length_scales, s.signal_variance) + 1e-6 * np.eye(3)
        k_query = matern52(x, q, s.length_scales, s.signal_variance)
        inv = np.linalg.inv(k_train)
        mean_oracle = s.prior_mean + k_query.T @ inv @ (y - s.prior_mean)
        var_oracle = s.signal_variance - np.sum(k_query * (inv @ k_query), axis=0)
        mean, var = gp_predict(s, q)
        assert np.max(np.abs(mean - mean_oracle)) < 1e-10
        assert np.max(np.abs(var - var_oracle)) < 1e-10

    def test_variance_clamped_nonnegative(self, rng):
        x = rng.random((8, 2))
        y = rng.normal(size=8)
        s = gp_fit(x, y, noise=0.0)
        _, var = gp_predict(s, x)
        assert np.all(var >= 0.0)


def test_kernel_basics():
    a = np.array([[0.0], [1.0]])
    k = matern52(a, a, np.array([0.5]), 2.0)
    assert k[0, 0] == pytest.approx(2.0)
    assert k[0, 1] == k[1, 0]
    assert k[0, 1] < k[0, 0]
