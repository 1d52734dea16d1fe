from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

import numpy as np

from ..exceptions import StructuralError

if TYPE_CHECKING:
    from .dataset import GaussianPrior


class LikelihoodModel(ABC):
    """Abstract base class for likelihoods that the particle samplers can drive.

    A model is linear-in-features: every prediction depends on θ only through
    ``Gᵀθ`` where G is the observation operator. The samplers need G, the
    targets d, the ensemble mean of the responses y(θ) and of the weight
    matrix R(θ) = dy/d(Gᵀθ). Loss, gradient and Hessian follow from these.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension of the (possibly stacked) parameter vector"""
        pass

    @abstractmethod
    def observation_operator(self) -> np.ndarray:
        """G of shape (dim, num_observations)"""
        pass

    @abstractmethod
    def targets(self) -> np.ndarray:
        """Observed targets d, shape (num_observations,)"""
        pass

    @abstractmethod
    def responses(self, particles: np.ndarray) -> np.ndarray:
        """y(θ) for each row of ``particles`` (J, dim) -> (J, num_observations)"""
        pass

    @abstractmethod
    def mean_weights(self, particles: np.ndarray) -> np.ndarray:
        """Ensemble average of R(θ), shape (num_observations, num_observations)"""
        pass

    @abstractmethod
    def loss(self, theta: np.ndarray) -> float:
        """Negative log-likelihood Ψ(θ)"""
        pass

    @property
    def num_observations(self) -> int:
        return self.targets().size

    @property
    def diagonal_weights(self) -> bool:
        """True when R(θ) is always diagonal"""
        return False

    def mean_response(self, particles: np.ndarray) -> np.ndarray:
        """Ensemble average μ[y]"""
        return self.responses(np.atleast_2d(particles)).mean(axis=0)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        """∇Ψ = G (y(θ) - d)"""
        theta = self._check_theta(theta)
        return self.observation_operator() @ (self.responses(theta[None, :])[0] - self.targets())

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        """D²Ψ = G R(θ) Gᵀ, symmetrised"""
        theta = self._check_theta(theta)
        g = self.observation_operator()
        h = g @ self.mean_weights(theta[None, :]) @ g.T
        return 0.5 * (h + h.T)

    def neg_log_posterior(self, theta: np.ndarray, prior: 'GaussianPrior') -> float:
        """Ψ(θ) + ½(θ - m_prior)ᵀ P_prior⁻¹ (θ - m_prior); the normalising constant is dropped"""
        self._check_prior(prior)
        return self.loss(theta) + prior.quadratic(theta)

    def neg_log_posterior_gradient(self, theta: np.ndarray, prior: 'GaussianPrior') -> np.ndarray:
        self._check_prior(prior)
        return self.gradient(theta) + prior.solve(np.asarray(theta, dtype=float) - prior.mean)

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.dim:
            raise ModelError(f"Parameter has dimension {theta.size}, model expects {self.dim}")
        return theta

    def _check_prior(self, prior: 'GaussianPrior') -> None:
        if prior.dim != self.dim:
            raise PriorError(f"Prior dimension {prior.dim} does not match model dimension {self.dim}")


class ModelError(StructuralError):
    """Base exception for model errors"""
    pass


class LabelError(ModelError):
    """A label lies outside the range the model accepts"""
    pass


class PriorError(ModelError):
    """Prior is malformed, not positive definite, or of the wrong dimension"""
    pass
