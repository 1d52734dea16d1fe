"""Binary logistic regression likelihood.

With features Φ (D x N) and labels d ∈ {0, 1}^N:

    y_n(θ) = σ(⟨θ, φⁿ⟩),   R(θ) = diag(y_n (1 - y_n))
    Ψ(θ)   = -Σ_n [dⁿ log y_n + (1 - dⁿ) log(1 - y_n)]
    ∇Ψ     = Φ (y - d),     D²Ψ = Φ R Φᵀ

Probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] inside the log terms
only; y and R themselves are used unclamped.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from .base import LabelError, LikelihoodModel
from .dataset import Dataset, GaussianPrior


PROB_CLAMP = 1e-12


def sigmoid(z: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """σ(z) = 1 / (1 + exp(-z)), overflow-free for all finite z"""
    return expit(z)


@dataclass(frozen=True, eq=False)
class LikelihoodEval:
    """y, the diagonal of R and the loss Ψ at one parameter value"""

    y: np.ndarray
    r_diag: np.ndarray
    loss: float


def _require_binary(data: Dataset) -> None:
    if not data.is_binary:
        raise LabelError(f"Logistic loss needs labels in {{0, 1}}, dataset has {data.num_classes} classes")


def _clamped_cross_entropy(y: np.ndarray, d: np.ndarray) -> float:
    yc = np.clip(y, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.sum(d * np.log(yc) + (1 - d) * np.log1p(-yc)))


def evaluate_likelihood(theta: np.ndarray, data: Dataset) -> LikelihoodEval:
    _require_binary(data)
    y = sigmoid(np.asarray(theta, dtype=float) @ data.features)
    return LikelihoodEval(y=y, r_diag=y * (1.0 - y), loss=_clamped_cross_entropy(y, data.labels))


def cross_entropy(theta: np.ndarray, data: Dataset) -> float:
    return evaluate_likelihood(theta, data).loss


def grad_loss(theta: np.ndarray, data: Dataset) -> np.ndarray:
    return LogisticModel(data).gradient(theta)


def hessian_loss(theta: np.ndarray, data: Dataset) -> np.ndarray:
    return LogisticModel(data).hessian(theta)


def neg_log_posterior(theta: np.ndarray, data: Dataset, prior: GaussianPrior) -> float:
    return LogisticModel(data).neg_log_posterior(theta, prior)


class LogisticModel(LikelihoodModel):
    """Logistic likelihood with G = Φ and diagonal weights"""

    def __init__(self, data: Dataset):
        _require_binary(data)
        self.data = data

    @property
    def dim(self) -> int:
        return self.data.dim

    @property
    def diagonal_weights(self) -> bool:
        return True

    def observation_operator(self) -> np.ndarray:
        return self.data.features

    def targets(self) -> np.ndarray:
        return self.data.labels.astype(float)

    def responses(self, particles: np.ndarray) -> np.ndarray:
        return sigmoid(np.atleast_2d(particles) @ self.data.features)

    def mean_weight_diagonal(self, particles: np.ndarray) -> np.ndarray:
        """μ[R] as the vector of its diagonal entries"""
        y = self.responses(particles)
        return (y * (1.0 - y)).mean(axis=0)

    def mean_weights(self, particles: np.ndarray) -> np.ndarray:
        return np.diag(self.mean_weight_diagonal(particles))

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_theta(theta)
        phi = self.data.features
        h = (phi * self.mean_weight_diagonal(theta[None, :])) @ phi.T
        return 0.5 * (h + h.T)

    def loss(self, theta: np.ndarray) -> float:
        return evaluate_likelihood(self._check_theta(theta), self.data).loss

    def __repr__(self) -> str:
        return f"LogisticModel(D={self.dim}, N={self.data.size})"
