"""Laplace baseline: N(θ_MAP, H⁻¹) and its probit predictive."""

from typing import Union

import numpy as np
import scipy.linalg
from scipy.special import expit

from .moments import GaussianMoments
from .quadrature import projected_moments
from ..exceptions import NumericError
from ..models import Dataset, GaussianPrior, LikelihoodModel, ModelFactory
from ..utils.logger import Logger


ARMIJO = 1e-4
MIN_STEP = 1e-10
# relative rounding level of the negative log-posterior
NOISE_FLOOR = 1e-12
# π/8 matches the probit and logistic slopes at the origin
PROBIT_SCALE = np.pi / 8.0


class LaplaceConvergenceError(NumericError):
    """Newton's method did not reach the gradient tolerance"""

    def __init__(self, message: str, last_iterate: np.ndarray):
        self.last_iterate = last_iterate
        super().__init__(message)


def _posterior_hessian(model: LikelihoodModel, prior: GaussianPrior, theta: np.ndarray) -> np.ndarray:
    h = model.hessian(theta) + prior.solve(np.eye(prior.dim))
    return 0.5 * (h + h.T)


def laplace_fit(data: Union[Dataset, LikelihoodModel], prior: GaussianPrior, tol: float = 1e-10,
                max_iter: int = 100) -> GaussianMoments:
    """Damped Newton on the negative log-posterior, started at the prior mean.

    Returns (θ_MAP, H⁻¹) with H = G R(θ_MAP) Gᵀ + P_prior⁻¹.
    """
    model = ModelFactory.as_model(data)
    logger = Logger.get_logger()
    theta = prior.mean.copy()
    objective = lambda t: model.neg_log_posterior(t, prior)  # noqa: E731

    for iteration in range(max_iter + 1):
        grad = model.neg_log_posterior_gradient(theta, prior)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tol:
            logger.debug(f"Laplace: converged after {iteration} Newton steps, |grad| = {grad_norm:.3e}")
            h = _posterior_hessian(model, prior, theta)
            cov = scipy.linalg.solve(h, np.eye(h.shape[0]), assume_a='pos')
            return GaussianMoments(theta, 0.5 * (cov + cov.T))
        if iteration == max_iter:
            break

        h = _posterior_hessian(model, prior, theta)
        direction = scipy.linalg.solve(h, grad, assume_a='pos')
        slope = float(grad @ direction)
        current = objective(theta)
        if slope <= NOISE_FLOOR * max(1.0, abs(current)):
            # Decrease is below the rounding of the objective; Armijo cannot tell steps apart
            theta = theta - direction
            continue
        t = 1.0
        while t > MIN_STEP and objective(theta - t * direction) > current - ARMIJO * t * slope:
            t *= 0.5
        if t <= MIN_STEP:
            raise LaplaceConvergenceError(
                f"Line search found no decrease at Newton step {iteration} (decrement {slope:.3e})", theta)
        theta = theta - t * direction

    raise LaplaceConvergenceError(
        f"Newton iteration did not reach |grad| < {tol:g} within {max_iter} steps (last |grad| = {grad_norm:.3e})",
        theta,
    )


def probit_predictive(moments: GaussianMoments, features: np.ndarray) -> Union[float, np.ndarray]:
    """σ(a / √(1 + π v / 8)) with a = φᵀm, v = φᵀPφ; a vector for a D x M feature matrix"""
    features = np.asarray(features, dtype=float)
    single = features.ndim == 1
    a, v = projected_moments(moments, features.reshape(moments.dim, -1))
    p = expit(a / np.sqrt(1.0 + PROBIT_SCALE * v))
    return float(p[0]) if single else p
