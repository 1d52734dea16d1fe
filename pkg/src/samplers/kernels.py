"""Tamed update kernels shared by all samplers.

likelihood_step is the homotopy step and the first half of the
second-order splitting:

    m'  = m - Δs P G (μ[y] - d)
    Θ'  = Θ - (Δs/2) P G M Gᵀ Θ

prior_relax_step is the second half:

    θ'  = θ - (Δs/2) P S⁻¹ (θ + m - 2 m_prior) + (Δs/2)(θ - m),   S = Δs P + P_prior

All statistics are frozen at the start of a step.
"""

from typing import Union

import numpy as np
import scipy.linalg

from .base import SamplerConfigError, SamplerSolveError
from ..ensemble import Ensemble, EnsembleStats, compute_stats
from ..models import Dataset, GaussianPrior, LikelihoodModel, ModelFactory


ModelLike = Union[Dataset, LikelihoodModel]


as_model = ModelFactory.as_model


def mean_weights(model: LikelihoodModel, particles: np.ndarray) -> np.ndarray:
    """μ[R] as a vector when the model's weights are diagonal, else as a matrix"""
    if model.diagonal_weights and hasattr(model, 'mean_weight_diagonal'):
        return model.mean_weight_diagonal(particles)
    return model.mean_weights(particles)


def taming_matrix(stats: EnsembleStats, operator: np.ndarray, weights: np.ndarray, step_size: float,
                  diagonal: bool = False, form: str = 'consistent') -> np.ndarray:
    """M_k for the deviation update.

    ``weights`` is μ_k[R], either its diagonal (N,) or the full (N, N) matrix.
    With Q = Gᵀ P_k G the consistent form is (Δs Q + μ[R]⁻¹)⁻¹, evaluated as
    (I + Δs μ[R] Q)⁻¹ μ[R] so that singular weights are allowed; the literal
    form is (Δs Q + μ[R])⁻¹. In diagonal mode only the diagonal of the
    bracketed matrix is inverted and the result is the vector of M's diagonal.
    """
    if step_size < 0:
        raise SamplerConfigError(f"step_size must be non-negative, got {step_size}")
    weights = np.asarray(weights, dtype=float)
    pg = stats.covariance @ operator

    if diagonal:
        q = np.einsum('ij,ij->j', operator, pg)
        w = weights if weights.ndim == 1 else np.diag(weights).copy()
        if form == 'literal':
            denom = step_size * q + w
            if np.any(denom <= 0):
                raise SamplerSolveError("Literal taming matrix has a non-positive diagonal entry")
            return 1.0 / denom
        return w / (1.0 + step_size * w * q)

    w_mat = np.diag(weights) if weights.ndim == 1 else weights
    q_mat = operator.T @ pg
    try:
        if form == 'literal':
            m = scipy.linalg.solve(step_size * q_mat + w_mat, np.eye(w_mat.shape[0]), assume_a='sym')
        else:
            m = scipy.linalg.solve(np.eye(w_mat.shape[0]) + step_size * w_mat @ q_mat, w_mat)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SamplerSolveError(f"Taming matrix is singular: {e}") from e
    return 0.5 * (m + m.T)


def likelihood_step(ensemble: Ensemble, model: LikelihoodModel, step_size: float,
                    diagonal_inverse: bool = False, taming_form: str = 'consistent') -> Ensemble:
    """One tamed likelihood-driven step of mean and deviations"""
    if ensemble.dim != model.dim:
        raise SamplerConfigError(f"Ensemble dimension {ensemble.dim} does not match model dimension {model.dim}")
    stats = compute_stats(ensemble)
    g = model.observation_operator()
    particles = ensemble.particles
    pg = stats.covariance @ g

    misfit = model.mean_response(particles) - model.targets()
    mean = stats.mean - step_size * (pg @ misfit)

    m = taming_matrix(stats, g, mean_weights(model, particles), step_size,
                      diagonal=diagonal_inverse, form=taming_form)
    projected = g.T @ stats.deviations
    tamed = m[:, None] * projected if m.ndim == 1 else m @ projected
    deviations = stats.deviations - 0.5 * step_size * (pg @ tamed)
    return Ensemble.from_mean_and_deviations(mean, deviations)


def prior_relax_step(ensemble: Ensemble, prior: GaussianPrior, step_size: float,
                     diagonal_inverse: bool = False, spread: bool = True) -> Ensemble:
    """Tamed prior relaxation plus, when ``spread`` is set, the spread-restoring term.

    With ``diagonal_inverse`` and a diagonal prior, S = Δs P + P_prior is
    inverted through its diagonal only.
    """
    if ensemble.dim != prior.dim:
        raise SamplerConfigError(f"Ensemble dimension {ensemble.dim} does not match prior dimension {prior.dim}")
    stats = compute_stats(ensemble)
    theta = ensemble.particles.T
    m = stats.mean[:, None]
    rhs = theta + m - 2.0 * prior.mean[:, None]
    s = step_size * stats.covariance + prior.covariance

    if diagonal_inverse and prior.is_diagonal:
        correction = rhs / np.diag(s)[:, None]
    else:
        try:
            correction = scipy.linalg.solve(s, rhs, assume_a='pos')
        except (np.linalg.LinAlgError, ValueError) as e:
            raise SamplerSolveError(f"Cannot solve with Δs P + P_prior: {e}") from e

    updated = theta - 0.5 * step_size * (stats.covariance @ correction)
    if spread:
        updated = updated + 0.5 * step_size * (theta - m)
    return Ensemble(updated.T)
