import numpy as np
import pytest

from src.models import (
    Dataset,
    GaussianPrior,
    LabelError,
    LogisticModel,
    ModelError,
    ModelFactory,
    PriorError,
    SoftmaxModel,
    class_probabilities,
    cross_entropy,
    grad_loss,
    hessian_loss,
    neg_log_posterior,
    random_spd_prior,
    sigmoid,
    softmax_probs,
)


def finite_difference_gradient(f, theta, h=1e-5):
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return grad


class TestSigmoid:
    """Tests for the logistic function."""

    def test_known_values(self):
        """Test σ(0) = 1/2 and σ(ln 3) = 3/4."""
        assert sigmoid(0.0) == 0.5
        assert sigmoid(np.log(3.0)) == pytest.approx(0.75, abs=1e-15)

    def test_no_overflow(self):
        """Test that extreme arguments saturate without warnings."""
        with np.errstate(over='raise', invalid='raise'):
            values = sigmoid(np.array([-1000.0, 1000.0]))
        np.testing.assert_array_equal(values, [0.0, 1.0])

    def test_reflection(self):
        """Test σ(-z) = 1 - σ(z) over a range of arguments."""
        z = np.linspace(-30.0, 30.0, 601)
        np.testing.assert_allclose(sigmoid(-z), 1.0 - sigmoid(z), rtol=0, atol=1e-15)

    def test_saturation_at_forty(self):
        """Test that σ(40) is within 1e-17 of one and does not exceed it."""
        with np.errstate(over='raise'):
            value = sigmoid(40.0)
        assert value <= 1.0
        assert 1.0 - value < 1e-17


class TestDataset:
    """Tests for Dataset validation and files."""

    def test_binary_labels_outside_range_rejected(self):
        """Test that label 2 in a binary dataset raises LabelError."""
        with pytest.raises(LabelError):
            Dataset(np.zeros((2, 3)), np.array([0, 1, 2]))

    def test_fractional_labels_rejected(self):
        """Test that non-integer labels raise LabelError."""
        with pytest.raises(LabelError):
            Dataset(np.zeros((1, 2)), np.array([0.5, 1.0]))

    def test_multiclass_labels_start_at_one(self):
        """Test that label 0 is rejected for K = 3."""
        with pytest.raises(LabelError):
            Dataset(np.zeros((2, 3)), np.array([0, 1, 2]), num_classes=3)

    def test_label_count_must_match(self):
        """Test that a label count different from N raises ModelError."""
        with pytest.raises(ModelError):
            Dataset(np.zeros((2, 3)), np.array([0, 1]))

    def test_csv_round_trip_infers_classes(self, store):
        """Test that a blob dataset reloads with K inferred from its labels."""
        data = Dataset(np.arange(8.0).reshape(2, 4), np.array([1, 2, 3, 1]), num_classes=3)
        path = data.to_csv(store, "data.csv")
        reloaded = Dataset.from_csv(path)
        assert reloaded.num_classes == 3
        np.testing.assert_array_equal(reloaded.features, data.features)
        np.testing.assert_array_equal(reloaded.labels, data.labels)

    def test_csv_with_labels_one_and_two_rejected(self, store):
        """Test that a file with labels 1 and 2 names the 0/1 convention for two classes."""
        path = store.write_matrix("data.csv", ["phi_0", "label"], np.array([[0.5, 1.0], [-0.5, 2.0]]))
        with pytest.raises(LabelError, match="labels 0 and 1"):
            Dataset.from_csv(path)

    def test_csv_with_binary_labels(self, store):
        """Test that 0/1 labels reload as a binary dataset."""
        path = store.write_matrix("data.csv", ["phi_0", "label"], np.array([[0.5, 1.0], [-0.5, 0.0]]))
        assert Dataset.from_csv(path).is_binary


class TestGaussianPrior:
    """Tests for GaussianPrior."""

    def test_non_spd_covariance_rejected(self):
        """Test that an indefinite covariance raises PriorError."""
        with pytest.raises(PriorError):
            GaussianPrior(np.zeros(2), np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_shape_mismatch_rejected(self):
        """Test that a mean of the wrong length raises PriorError."""
        with pytest.raises(PriorError):
            GaussianPrior(np.zeros(3), np.eye(2))

    def test_solve_and_quadratic(self):
        """Test that solve applies the precision and quadratic is ½ xᵀP⁻¹x."""
        prior = GaussianPrior(np.zeros(2), np.diag([2.0, 4.0]))
        np.testing.assert_allclose(prior.solve(np.array([2.0, 4.0])), [1.0, 1.0])
        assert prior.quadratic(np.array([2.0, 0.0])) == pytest.approx(1.0)

    def test_random_spd_prior_is_spd(self, rng):
        """Test that the random SPD prior has positive eigenvalues."""
        prior = random_spd_prior(6, rng)
        assert np.linalg.eigvalsh(prior.covariance).min() > 0
        assert not prior.is_diagonal

    def test_block_diagonal(self):
        """Test that block_diagonal repeats the covariance along the diagonal."""
        prior = GaussianPrior(np.array([1.0, 2.0]), np.array([[2.0, 0.5], [0.5, 1.0]])).block_diagonal(3)
        assert prior.dim == 6
        np.testing.assert_array_equal(prior.covariance[2:4, 2:4], [[2.0, 0.5], [0.5, 1.0]])
        np.testing.assert_array_equal(prior.covariance[0:2, 2:4], np.zeros((2, 2)))
        np.testing.assert_array_equal(prior.mean, [1.0, 2.0] * 3)


class TestLogisticModel:
    """Tests for the binary logistic likelihood."""

    def test_cross_entropy_at_origin(self):
        """Test that Ψ(0) = N ln 2."""
        data = Dataset(np.arange(8.0).reshape(2, 4), np.array([0, 1, 1, 0]))
        assert cross_entropy(np.zeros(2), data) == pytest.approx(4 * np.log(2.0), rel=1e-14)

    def test_cross_entropy_single_sample(self):
        """Test Ψ = -ln 0.75 for one positive sample with ⟨θ, φ⟩ = ln 3."""
        data = Dataset(np.array([[2.0]]), np.array([1]))
        theta = np.array([np.log(3.0) / 2.0])
        assert cross_entropy(theta, data) == pytest.approx(-np.log(0.75), rel=1e-13)

    @pytest.mark.parametrize("seed", range(20))
    def test_cross_entropy_midpoint_convexity(self, seed):
        """Test Ψ((a + b)/2) ≤ (Ψ(a) + Ψ(b))/2 on random segments."""
        rng = np.random.default_rng(seed)
        data = Dataset(rng.standard_normal((4, 12)), rng.integers(0, 2, 12))
        a, b = 3.0 * rng.standard_normal((2, 4))
        midpoint = cross_entropy(0.5 * (a + b), data)
        assert midpoint <= 0.5 * (cross_entropy(a, data) + cross_entropy(b, data)) + 1e-12

    def test_cross_entropy_decreases_along_negative_gradient(self, rng):
        """Test that a small step along -∇Ψ lowers the loss."""
        data = Dataset(rng.standard_normal((5, 7)), rng.integers(0, 2, 7))
        theta = rng.standard_normal(5)
        step = theta - 1e-3 * grad_loss(theta, data)
        assert cross_entropy(step, data) < cross_entropy(theta, data)

    def test_gradient_vanishes_for_balanced_duplicates(self):
        """Test ∇Ψ(0) = 0 when two equal features carry labels 1 and 0."""
        data = Dataset(np.array([[1.5, 1.5], [-0.5, -0.5]]), np.array([1, 0]))
        np.testing.assert_array_equal(grad_loss(np.zeros(2), data), np.zeros(2))

    def test_single_sample_hessian(self):
        """Test D²Ψ = φ² y (1 - y) = 0.75 for φ = 2 and y = 3/4."""
        data = Dataset(np.array([[2.0]]), np.array([0]))
        theta = np.array([np.log(3.0) / 2.0])
        assert hessian_loss(theta, data)[0, 0] == pytest.approx(0.75, rel=1e-13)

    @pytest.mark.parametrize("seed", range(20))
    def test_hessian_is_positive_semidefinite(self, seed):
        """Test that the Hessian is symmetric with no eigenvalue below -1e-10."""
        rng = np.random.default_rng(seed)
        data = Dataset(3.0 * rng.standard_normal((6, 4)), rng.integers(0, 2, 4))
        h = hessian_loss(5.0 * rng.standard_normal(6), data)
        np.testing.assert_allclose(h, h.T, rtol=0, atol=1e-12 * np.abs(h).max())
        assert np.linalg.eigvalsh(h).min() >= -1e-10

    def test_neg_log_posterior_at_origin(self):
        """Test that one sample at θ = m_prior = 0 gives ln 2."""
        data = Dataset(np.array([[0.7, -1.1]]).T, np.array([1]))
        assert neg_log_posterior(np.zeros(2), data, GaussianPrior.isotropic(2)) == pytest.approx(np.log(2.0))

    def test_neg_log_posterior_without_features(self, rng):
        """Test that zero features leave ½‖θ‖² plus the constant N ln 2 under a unit prior."""
        data = Dataset(np.zeros((3, 2)), np.array([0, 1]))
        theta = rng.standard_normal(3)
        expected = 0.5 * theta @ theta + 2 * np.log(2.0)
        assert neg_log_posterior(theta, data, GaussianPrior.isotropic(3)) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_neg_log_posterior_gradient_matches_finite_differences(self, seed):
        """Test the posterior gradient against central differences with h = 1e-5."""
        rng = np.random.default_rng(seed)
        data = Dataset(rng.standard_normal((5, 7)), rng.integers(0, 2, 7))
        prior = GaussianPrior(rng.standard_normal(5), np.diag(rng.uniform(0.5, 2.0, 5)))
        theta = rng.standard_normal(5)
        numeric = finite_difference_gradient(lambda t: neg_log_posterior(t, data, prior), theta)
        analytic = LogisticModel(data).neg_log_posterior_gradient(theta, prior)
        assert np.abs(analytic - numeric).max() <= 1e-6

    @pytest.mark.parametrize("seed", range(50))
    def test_gradient_matches_finite_differences(self, seed):
        """Test the analytic gradient against central differences."""
        rng = np.random.default_rng(seed)
        data = Dataset(rng.standard_normal((5, 7)), rng.integers(0, 2, 7))
        theta = rng.standard_normal(5)
        numeric = finite_difference_gradient(lambda t: cross_entropy(t, data), theta)
        np.testing.assert_allclose(grad_loss(theta, data), numeric, atol=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_hessian_matches_finite_differences(self, seed):
        """Test the analytic Hessian against differences of the gradient."""
        rng = np.random.default_rng(seed)
        data = Dataset(rng.standard_normal((4, 9)), rng.integers(0, 2, 9))
        theta = rng.standard_normal(4)
        h = 1e-5
        numeric = np.column_stack([
            (grad_loss(theta + h * e, data) - grad_loss(theta - h * e, data)) / (2 * h) for e in np.eye(4)
        ])
        np.testing.assert_allclose(hessian_loss(theta, data), numeric, rtol=1e-5, atol=1e-8)

    def test_hessian_at_origin(self, rng):
        """Test that the Hessian at θ = 0 is ΦΦᵀ / 4."""
        phi = rng.standard_normal((3, 6))
        data = Dataset(phi, np.array([0, 1, 0, 1, 1, 0]))
        np.testing.assert_allclose(hessian_loss(np.zeros(3), data), 0.25 * phi @ phi.T, atol=1e-14)

    def test_scalar_hessian(self):
        """Test the one-dimensional Hessian at θ = 0 for features 1 and 2."""
        data = Dataset(np.array([[1.0, 2.0]]), np.array([1, 0]))
        theta = np.array([0.0])
        # Σ φ² σ(0)(1 - σ(0)) = (1 + 4) / 4
        assert hessian_loss(theta, data)[0, 0] == pytest.approx(1.25)

    def test_multiclass_dataset_rejected(self):
        """Test that the logistic model refuses K = 3 labels."""
        with pytest.raises(LabelError):
            LogisticModel(Dataset(np.zeros((1, 3)), np.array([1, 2, 3]), num_classes=3))

    def test_posterior_needs_matching_prior(self):
        """Test that a prior of the wrong dimension raises PriorError."""
        model = LogisticModel(Dataset(np.zeros((2, 2)), np.array([0, 1])))
        with pytest.raises(PriorError):
            model.neg_log_posterior(np.zeros(2), GaussianPrior.isotropic(3))


class TestSoftmax:
    """Tests for the multiclass softmax model."""

    def test_uniform_for_equal_logits(self):
        """Test that equal logits give probability 1/K each."""
        probs = softmax_probs(np.ones((4, 2)), np.array([0.3, -1.0]))
        np.testing.assert_allclose(probs, np.full(4, 0.25))

    def test_two_classes_reduce_to_sigmoid(self, rng):
        """Test that K = 2 gives σ(z₁ - z₂) for the first class."""
        theta = rng.standard_normal((2, 3))
        phi = rng.standard_normal(3)
        z = theta @ phi
        assert softmax_probs(theta, phi)[0] == pytest.approx(sigmoid(z[0] - z[1]), rel=1e-12)

    def test_large_logits_do_not_overflow(self):
        """Test that logits (100, 0) give (1, e^-100) without overflow."""
        with np.errstate(over='raise'):
            probs = softmax_probs(np.array([[100.0], [0.0]]), np.array([1.0]))
        assert probs[0] == pytest.approx(1.0)
        assert probs[1] == pytest.approx(np.exp(-100.0), rel=1e-10)

    def test_class_probabilities_shape(self, rng):
        """Test that stacked particles give a (J, M, K) probability array summing to one."""
        probs = class_probabilities(rng.standard_normal((5, 3 * 2)), rng.standard_normal((2, 7)), 3)
        assert probs.shape == (5, 7, 3)
        np.testing.assert_allclose(probs.sum(axis=2), 1.0)

    def test_gradient_matches_finite_differences(self, rng):
        """Test that G(y - d) is the gradient of the multiclass loss."""
        data = Dataset(rng.standard_normal((2, 6)), np.array([1, 2, 3, 1, 2, 3]), num_classes=3)
        model = SoftmaxModel(data)
        theta = rng.standard_normal(model.dim)
        numeric = finite_difference_gradient(model.loss, theta)
        np.testing.assert_allclose(model.gradient(theta), numeric, atol=1e-6)

    def test_weights_are_block_psd(self, rng):
        """Test that μ[R] is symmetric PSD with zero row sums per block."""
        data = Dataset(rng.standard_normal((2, 4)), np.array([1, 2, 3, 1]), num_classes=3)
        model = SoftmaxModel(data)
        weights = model.mean_weights(rng.standard_normal((6, model.dim)))
        np.testing.assert_allclose(weights, weights.T, atol=1e-15)
        assert np.linalg.eigvalsh(weights).min() > -1e-12
        np.testing.assert_allclose(weights.sum(axis=1), 0.0, atol=1e-12)

    def test_binary_dataset_rejected(self):
        """Test that SoftmaxModel needs K > 2."""
        with pytest.raises(LabelError):
            SoftmaxModel(Dataset(np.zeros((1, 2)), np.array([0, 1])))


class TestModelFactory:
    """Tests for ModelFactory."""

    def test_picks_model_from_labels(self):
        """Test that binary data gives LogisticModel and K = 3 gives SoftmaxModel."""
        binary = Dataset(np.zeros((2, 2)), np.array([0, 1]))
        multi = Dataset(np.zeros((2, 3)), np.array([1, 2, 3]), num_classes=3)
        assert isinstance(ModelFactory.create_model(binary), LogisticModel)
        assert isinstance(ModelFactory.create_model(multi), SoftmaxModel)

    def test_unknown_kind(self):
        """Test that an unknown model kind raises ModelError."""
        with pytest.raises(ModelError):
            ModelFactory.create_model(Dataset(np.zeros((1, 1)), np.array([1])), "probit")

    def test_stacked_prior(self):
        """Test that a per-class prior is lifted to K·D."""
        model = SoftmaxModel(Dataset(np.zeros((2, 3)), np.array([1, 2, 3]), num_classes=3))
        prior = ModelFactory.stacked_prior(GaussianPrior.isotropic(2), model)
        assert prior.dim == 6
        with pytest.raises(ModelError):
            ModelFactory.stacked_prior(GaussianPrior.isotropic(4), model)
