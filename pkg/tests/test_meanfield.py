import itertools
from unittest.mock import patch

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit

from src.evaluation import synthesize_logistic_dataset
from src.meanfield import (
    GaussianMoments,
    LaplaceConvergenceError,
    MomentsError,
    equilibrium_residual,
    gaussian_expectations,
    importance_posterior_mean,
    integrate_moments,
    integrate_to_stationarity,
    laplace_fit,
    moment_ode_rhs,
    probit_predictive,
    sigmoid_expectations,
)
from src.models import Dataset, GaussianPrior, LogisticModel


@pytest.fixture
def tiny_data():
    return Dataset(np.array([[1.0]]), np.array([1]))


@pytest.fixture
def plane_data():
    data, _ = synthesize_logistic_dataset(2, 10, seed=3)
    return data


class TestGaussianMoments:
    """Tests for the GaussianMoments value type."""

    def test_asymmetric_covariance_rejected(self):
        """Test that a non-symmetric covariance raises MomentsError."""
        with pytest.raises(MomentsError):
            GaussianMoments(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_negative_eigenvalue_rejected(self):
        """Test that an indefinite covariance raises MomentsError."""
        with pytest.raises(MomentsError):
            GaussianMoments(np.zeros(2), np.diag([1.0, -0.1]))

    def test_singular_covariance_allowed(self):
        """Test that a positive semidefinite covariance is accepted."""
        assert GaussianMoments(np.zeros(2), np.diag([1.0, 0.0])).dim == 2

    def test_json_file(self, store):
        """Test that moments written as JSON load back unchanged."""
        moments = GaussianMoments(np.array([0.1, -0.2]), np.array([[2.0, 0.3], [0.3, 1.0]]))
        loaded = GaussianMoments.from_json(moments.to_json(store, "m.json"))
        np.testing.assert_array_equal(loaded.mean, moments.mean)
        np.testing.assert_array_equal(loaded.covariance, moments.covariance)

    def test_missing_field(self):
        """Test that a document without a covariance raises MomentsError."""
        with pytest.raises(MomentsError):
            GaussianMoments.from_dict({'mean': [0.0]})


class TestQuadrature:
    """Tests for the Gauss-Hermite sigmoid expectations."""

    def test_zero_variance_is_pointwise(self):
        """Test that v = 0 gives σ(a) and σ(a)(1 - σ(a))."""
        a = np.array([-2.0, 0.3, 4.0])
        y_bar, r_bar = sigmoid_expectations(a, np.zeros(3))
        np.testing.assert_allclose(y_bar, expit(a), rtol=1e-12)
        np.testing.assert_allclose(r_bar, expit(a) * expit(-a), rtol=1e-12)

    def test_zero_mean_is_one_half(self):
        """Test that E σ(z) = 1/2 for z ~ N(0, v) by symmetry."""
        y_bar, _ = sigmoid_expectations(np.zeros(3), np.array([0.1, 1.0, 25.0]))
        np.testing.assert_allclose(y_bar, 0.5, atol=1e-14)

    def test_against_monte_carlo(self):
        """Test quadrature at a = 1, v = 4 against 10⁶ samples."""
        z = 1.0 + 2.0 * np.random.default_rng(0).standard_normal(1_000_000)
        y_bar, r_bar = sigmoid_expectations(np.array([1.0]), np.array([4.0]))
        assert y_bar[0] == pytest.approx(expit(z).mean(), abs=2e-3)
        assert r_bar[0] == pytest.approx((expit(z) * expit(-z)).mean(), abs=2e-3)

    def test_feature_dimension_checked(self):
        """Test that features of the wrong dimension raise MomentsError."""
        with pytest.raises(MomentsError):
            gaussian_expectations(GaussianMoments(np.zeros(2), np.eye(2)), np.ones((3, 4)))


class TestMomentODE:
    """Tests for the mean-field moment equations and their integrator."""

    def test_flat_likelihood_rhs_vanishes_at_prior(self, flat_data):
        """Test that Φ = 0 makes the prior a stationary point."""
        prior = GaussianPrior.isotropic(2, scale=1.5, mean=np.array([0.5, -1.0]))
        dm, dp = moment_ode_rhs(prior.to_moments(), flat_data, prior)
        np.testing.assert_allclose(dm, 0.0, atol=1e-14)
        np.testing.assert_allclose(dp, 0.0, atol=1e-14)

    def test_flat_likelihood_trajectory_stays_at_prior(self, flat_data):
        """Test that integration from the prior stays there when Φ = 0."""
        prior = GaussianPrior.isotropic(2)
        final = integrate_moments(prior.to_moments(), flat_data, prior, 0.1, 5.0).final
        np.testing.assert_allclose(final.mean, prior.mean, atol=1e-12)
        np.testing.assert_allclose(final.covariance, prior.covariance, atol=1e-12)

    def test_fourth_order_convergence(self, tiny_data):
        """Test that halving h shrinks successive differences by about 2⁴."""
        prior = GaussianPrior.isotropic(1)

        def solve(h):
            final = integrate_moments(prior.to_moments(), tiny_data, prior, h, 2.0).final
            return np.concatenate([final.mean, final.covariance.ravel()])

        coarse, medium, fine = solve(0.2), solve(0.1), solve(0.05)
        ratio = np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine)
        assert 8.0 < ratio < 32.0

    def test_trace_bound_and_psd(self, small_data, unit_prior):
        """Test ‖P(s+h)‖_F ≤ e^h ‖P(s)‖_F and positive semidefiniteness along a trajectory."""
        h = 0.05
        trajectory = integrate_moments(unit_prior.to_moments(), small_data, unit_prior, h, 3.0)
        norms = [np.linalg.norm(p, 'fro') for p in trajectory.covariances]
        for before, after in zip(norms, norms[1:]):
            assert after <= np.exp(h) * before + 1e-12
        for p in trajectory.covariances:
            assert np.linalg.eigvalsh(p).min() > -1e-12

    def test_kernel_is_preserved(self, plane_data):
        """Test that a direction in the kernel of P₀ stays in the kernel of P_s."""
        prior = GaussianPrior.isotropic(2)
        initial = GaussianMoments(np.zeros(2), np.diag([1.0, 0.0]))
        trajectory = integrate_moments(initial, plane_data, prior, 0.05, 2.0)
        for p in trajectory.covariances:
            assert np.linalg.norm(p @ np.array([0.0, 1.0])) <= 1e-10

    def test_homotopy_variant_runs_to_one(self, small_data, unit_prior):
        """Test that the homotopy flow refuses any horizon other than 1."""
        with pytest.raises(MomentsError):
            integrate_moments(unit_prior.to_moments(), small_data, unit_prior, 0.1, 2.0, variant='homotopy')
        trajectory = integrate_moments(unit_prior.to_moments(), small_data, None, 0.1, 1.0, variant='homotopy')
        assert trajectory.times[-1] == pytest.approx(1.0)

    def test_second_order_needs_prior(self, small_data, unit_prior):
        """Test that the second-order right-hand side needs a prior."""
        with pytest.raises(MomentsError):
            moment_ode_rhs(unit_prior.to_moments(), small_data, None)

    def test_particle_at_mean_follows_mean(self, small_data, unit_prior):
        """Test that a mean-field particle started at m tracks m."""
        start = unit_prior.to_moments()
        trajectory = integrate_moments(start, small_data, unit_prior, 0.05, 2.0, particles=start.mean[None, :])
        np.testing.assert_allclose(trajectory.particles[0], trajectory.final.mean, atol=1e-10)

    def test_trajectory_csv(self, store, plane_data):
        """Test the trajectory CSV header with residual columns."""
        prior = GaussianPrior.isotropic(2)
        trajectory = integrate_moments(prior.to_moments(), plane_data, prior, 0.5, 1.0)
        path = trajectory.to_csv(store, "traj.csv", plane_data, prior)
        header = path.read_text().splitlines()[0].split(',')
        assert header == ['s', 'm_0', 'm_1', 'P_0_0', 'P_0_1', 'P_1_1', 'res_m', 'res_P']


class TestEquilibrium:
    """Tests for the stationary point of the second-order flow."""

    def test_stationary_point_has_small_residuals(self, plane_data):
        """Test that integration to stationarity satisfies the fixed-point equations."""
        prior = GaussianPrior.isotropic(2)
        moments, time = integrate_to_stationarity(prior.to_moments(), plane_data, prior)
        res_m, res_p = equilibrium_residual(moments, plane_data, prior)
        assert time > 0
        assert res_m < 1e-7
        assert res_p < 1e-7

    def test_perturbed_mean_has_residual(self, plane_data):
        """Test that moving the mean away from the fixed point shows up in res_m."""
        prior = GaussianPrior.isotropic(2)
        moments, _ = integrate_to_stationarity(prior.to_moments(), plane_data, prior)
        shifted = GaussianMoments(moments.mean + 0.5, moments.covariance)
        res_m, _ = equilibrium_residual(shifted, plane_data, prior)
        assert res_m > 1e-3

    def test_flat_likelihood_residual(self, flat_data):
        """Test that the prior is an exact fixed point when Φ = 0."""
        prior = GaussianPrior.isotropic(2)
        res_m, res_p = equilibrium_residual(prior.to_moments(), flat_data, prior)
        assert res_m == pytest.approx(0.0, abs=1e-15)
        assert res_p == pytest.approx(0.0, abs=1e-15)


class TestLaplace:
    """Tests for the Laplace baseline."""

    def test_scalar_map(self, tiny_data):
        """Test θ_MAP for one sample against a root of θ + σ(θ) - 1."""
        moments = laplace_fit(tiny_data, GaussianPrior.isotropic(1))
        root = brentq(lambda t: t + expit(t) - 1.0, -1.0, 1.0, xtol=1e-14)
        assert moments.mean[0] == pytest.approx(root, abs=1e-8)
        assert moments.mean[0] == pytest.approx(0.40106, abs=1e-5)
        s = expit(root)
        assert moments.covariance[0, 0] == pytest.approx(1.0 / (1.0 + s * (1.0 - s)), rel=1e-8)

    def test_flat_likelihood_returns_prior(self, flat_data):
        """Test that Φ = 0 gives back the prior mean and covariance."""
        prior = GaussianPrior.isotropic(2, scale=2.0, mean=np.array([1.0, 2.0]))
        moments = laplace_fit(flat_data, prior)
        np.testing.assert_allclose(moments.mean, prior.mean)
        np.testing.assert_allclose(moments.covariance, prior.covariance, rtol=1e-14)

    def test_gradient_vanishes_at_map(self, small_data, unit_prior):
        """Test that the returned mean is a stationary point of the negative log-posterior."""
        moments = laplace_fit(small_data, unit_prior)
        gradient = LogisticModel(small_data).neg_log_posterior_gradient(moments.mean, unit_prior)
        assert np.linalg.norm(gradient) < 1e-10

    def test_iteration_cap(self, small_data, unit_prior):
        """Test that running out of Newton steps raises with the last iterate attached."""
        with pytest.raises(LaplaceConvergenceError) as info:
            laplace_fit(small_data, unit_prior, max_iter=0)
        assert info.value.last_iterate.shape == (3,)

    @pytest.mark.parametrize("dim,num_samples,seed", [(5, 60, 0), (5, 60, 2), (5, 60, 8), (5, 60, 19), (20, 300, 5)])
    def test_converges_on_datasets_read_back_from_csv(self, store, dim, num_samples, seed):
        """Test that Newton reaches the default tolerance once the decrease drops below rounding."""
        data, _ = synthesize_logistic_dataset(dim, num_samples, seed=seed)
        loaded = Dataset.from_csv(data.to_csv(store, f"data_{seed}.csv"))
        moments = laplace_fit(loaded, GaussianPrior.isotropic(dim))
        gradient = LogisticModel(loaded).neg_log_posterior_gradient(moments.mean, GaussianPrior.isotropic(dim))
        assert np.linalg.norm(gradient) < 1e-10

    def test_line_search_never_accepts_an_increase(self, small_data, unit_prior):
        """Test that a direction with no Armijo decrease raises instead of taking the full step."""
        values = itertools.count(0.0)
        with patch.object(LogisticModel, 'neg_log_posterior', side_effect=lambda theta, prior: next(values)):
            with pytest.raises(LaplaceConvergenceError, match="Line search") as info:
                laplace_fit(small_data, unit_prior)
        np.testing.assert_array_equal(info.value.last_iterate, unit_prior.mean)


class TestImportancePosteriorMean:
    """Tests for the importance-sampled posterior mean."""

    def test_scalar_posterior_mean_matches_quadrature(self, tiny_data, rng):
        """Test one sample under a unit prior against ∫θ p(θ) dθ by adaptive quadrature."""
        density = lambda t: expit(t) * np.exp(-0.5 * t * t)  # noqa: E731
        norm = quad(density, -np.inf, np.inf)[0]
        exact = quad(lambda t: t * density(t), -np.inf, np.inf)[0] / norm
        estimate = importance_posterior_mean(tiny_data, GaussianPrior.isotropic(1), rng, num_draws=200000)
        assert estimate.mean[0] == pytest.approx(exact, abs=0.01)
        assert 0.5 * estimate.num_draws < estimate.effective_sample_size <= estimate.num_draws

    def test_flat_likelihood_gives_prior_mean(self, flat_data, rng):
        """Test that Φ = 0 returns the prior mean."""
        prior = GaussianPrior.isotropic(2, scale=2.0, mean=np.array([1.0, -3.0]))
        estimate = importance_posterior_mean(flat_data, prior, rng)
        np.testing.assert_allclose(estimate.mean, prior.mean, atol=0.05)

    def test_seeded_estimate_is_reproducible(self, small_data, unit_prior):
        """Test that one generator seed gives the same estimate twice."""
        first = importance_posterior_mean(small_data, unit_prior, np.random.default_rng(3), num_draws=500)
        second = importance_posterior_mean(small_data, unit_prior, np.random.default_rng(3), num_draws=500)
        np.testing.assert_array_equal(first.mean, second.mean)

    def test_invalid_draw_count(self, small_data, unit_prior, rng):
        """Test that fewer than two draws raise MomentsError."""
        with pytest.raises(MomentsError):
            importance_posterior_mean(small_data, unit_prior, rng, num_draws=1)


class TestProbit:
    """Tests for the probit predictive."""

    def test_zero_mean_is_one_half(self):
        """Test that m = 0 gives 1/2 for any covariance."""
        moments = GaussianMoments(np.zeros(2), np.array([[3.0, 1.0], [1.0, 2.0]]))
        assert probit_predictive(moments, np.array([0.7, -1.2])) == pytest.approx(0.5)

    def test_zero_covariance_is_sigmoid(self):
        """Test that P = 0 gives σ(φᵀm)."""
        moments = GaussianMoments(np.array([1.0, -0.5]), np.zeros((2, 2)))
        assert probit_predictive(moments, np.array([2.0, 1.0])) == pytest.approx(expit(1.5))

    def test_close_to_quadrature(self):
        """Test that the probit value at a = 1, v = 4 is within 0.02 of E σ(z)."""
        moments = GaussianMoments(np.array([1.0]), np.array([[4.0]]))
        y_bar, _ = sigmoid_expectations(np.array([1.0]), np.array([4.0]))
        assert probit_predictive(moments, np.array([1.0])) == pytest.approx(y_bar[0], abs=0.02)

    def test_matrix_of_features(self):
        """Test that a D x M feature matrix gives M probabilities."""
        moments = GaussianMoments(np.zeros(2), np.eye(2))
        assert probit_predictive(moments, np.ones((2, 5))).shape == (5,)
