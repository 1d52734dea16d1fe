"""Self-normalised importance sampling of the posterior mean.

The proposal is the Laplace approximation with its covariance inflated by
``inflation²``, so the tails of the proposal dominate those of the posterior.
Used as an independent oracle for the recovery experiment.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .laplace import laplace_fit
from .moments import MomentsError
from ..models import Dataset, GaussianPrior, LogisticModel
from ..utils.logger import Logger


DEFAULT_DRAWS = 20000
DEFAULT_INFLATION = 1.2
CHUNK = 4096
LOW_ESS_FRACTION = 0.01


@dataclass
class PosteriorMeanEstimate:
    mean: np.ndarray
    effective_sample_size: float
    num_draws: int


def _log_target(draws: np.ndarray, data: Dataset, prior: GaussianPrior) -> np.ndarray:
    """-Ψ(θ) - ½(θ - m)ᵀP⁻¹(θ - m) for each row of ``draws``"""
    out = np.empty(draws.shape[0])
    labels = data.labels.astype(float)
    factor = prior.cholesky
    for start in range(0, draws.shape[0], CHUNK):
        block = draws[start:start + CHUNK]
        logits = block @ data.features
        loss = (np.logaddexp(0.0, logits) - logits * labels).sum(axis=1)
        whitened = scipy.linalg.solve_triangular(factor, (block - prior.mean).T, lower=True)
        out[start:start + CHUNK] = -loss - 0.5 * np.sum(whitened ** 2, axis=0)
    return out


def importance_posterior_mean(data: Dataset, prior: GaussianPrior, rng: np.random.Generator,
                              num_draws: int = DEFAULT_DRAWS,
                              inflation: float = DEFAULT_INFLATION) -> PosteriorMeanEstimate:
    """Posterior mean of binary logistic regression under ``prior``"""
    model = LogisticModel(data)
    if num_draws < 2:
        raise MomentsError(f"num_draws must be at least 2, got {num_draws}")
    if not inflation > 0:
        raise MomentsError(f"inflation must be positive, got {inflation}")

    laplace = laplace_fit(model, prior)
    factor = np.linalg.cholesky(laplace.covariance)
    xi = rng.standard_normal((num_draws, prior.dim))
    draws = laplace.mean + inflation * xi @ factor.T

    # proposal log-density up to a constant is -½‖ξ‖²
    log_weights = _log_target(draws, data, prior) + 0.5 * np.sum(xi ** 2, axis=1)
    weights = np.exp(log_weights - logsumexp(log_weights))
    ess = float(1.0 / np.sum(weights ** 2))
    if ess < LOW_ESS_FRACTION * num_draws:
        Logger.get_logger().warning(
            f"Importance sampling kept an effective sample size of {ess:.0f} out of {num_draws} draws")
    return PosteriorMeanEstimate(mean=weights @ draws, effective_sample_size=ess, num_draws=num_draws)
