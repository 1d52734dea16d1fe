"""Softmax regression over K classes on a stacked parameter.

The parameter θ ∈ R^{K·D} stacks the class vectors class-major
(θ_k occupies entries k·D .. (k+1)·D - 1). Observations are indexed
n·K + k, so the observation operator has G[k·D:(k+1)·D, n·K + k] = φⁿ and
the weight matrix is block diagonal with K x K blocks diag(p) - p pᵀ.
"""

import numpy as np
import scipy.linalg
from scipy.special import softmax

from .base import LabelError, LikelihoodModel, ModelError
from .dataset import Dataset
from .logistic import PROB_CLAMP


def softmax_probs(theta_stack: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Class probabilities e^{z_k} / Σ_j e^{z_j} with z_k = θ_kᵀφ.

    ``theta_stack`` has shape (K, D) or is the flat class-major (K·D,) vector.
    """
    phi = np.asarray(phi, dtype=float).reshape(-1)
    theta = np.asarray(theta_stack, dtype=float).reshape(-1, phi.size)
    if theta.shape[0] < 2:
        raise ModelError(f"Softmax needs at least two classes, got {theta.shape[0]}")
    return softmax(theta @ phi)


def class_probabilities(particles: np.ndarray, features: np.ndarray, num_classes: int) -> np.ndarray:
    """Probabilities of shape (J, M, K) for stacked particles (J, K·D) and features (D, M)"""
    particles = np.atleast_2d(particles)
    dim = features.shape[0]
    if particles.shape[1] != num_classes * dim:
        raise ModelError(
            f"Stacked parameter has dimension {particles.shape[1]}, expected K·D = {num_classes}·{dim}"
        )
    stacked = particles.reshape(particles.shape[0], num_classes, dim)
    logits = np.einsum('jkd,dm->jmk', stacked, features)
    return softmax(logits, axis=2)


class SoftmaxModel(LikelihoodModel):
    """Multiclass likelihood for labels in {1, ..., K}"""

    def __init__(self, data: Dataset):
        if data.is_binary:
            raise LabelError("SoftmaxModel needs a dataset declared with num_classes > 2")
        self.data = data
        self.num_classes = data.num_classes
        k, n = self.num_classes, data.size
        g = np.zeros((k * data.dim, n * k))
        for c in range(k):
            g[c * data.dim:(c + 1) * data.dim, c::k] = data.features
        g.setflags(write=False)
        self._operator = g
        onehot = np.zeros((n, k))
        onehot[np.arange(n), data.labels - 1] = 1.0
        self._targets = onehot.reshape(-1)

    @property
    def dim(self) -> int:
        return self.num_classes * self.data.dim

    def observation_operator(self) -> np.ndarray:
        return self._operator

    def targets(self) -> np.ndarray:
        return self._targets

    def responses(self, particles: np.ndarray) -> np.ndarray:
        probs = class_probabilities(particles, self.data.features, self.num_classes)
        return probs.reshape(probs.shape[0], -1)

    def mean_weights(self, particles: np.ndarray) -> np.ndarray:
        probs = class_probabilities(particles, self.data.features, self.num_classes)
        outer = np.einsum('jnk,jnl->nkl', probs, probs) / probs.shape[0]
        diag = probs.mean(axis=0)
        blocks = [np.diag(diag[n]) - outer[n] for n in range(self.data.size)]
        return scipy.linalg.block_diag(*blocks)

    def loss(self, theta: np.ndarray) -> float:
        theta = self._check_theta(theta)
        probs = class_probabilities(theta[None, :], self.data.features, self.num_classes)[0]
        picked = probs[np.arange(self.data.size), self.data.labels - 1]
        return float(-np.sum(np.log(np.clip(picked, PROB_CLAMP, 1.0))))

    def __repr__(self) -> str:
        return f"SoftmaxModel(K={self.num_classes}, D={self.data.dim}, N={self.data.size})"
