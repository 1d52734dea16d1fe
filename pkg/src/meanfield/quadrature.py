"""Gaussian expectations of sigmoid functionals by Gauss-Hermite quadrature.

σ depends on θ only through z = ⟨θ, φ⟩, so for θ ~ N(m, P) every expectation
reduces to a scalar one over z ~ N(a, v) with a = φᵀm, v = φᵀPφ:

    E f(z) = π^{-1/2} Σ_i w_i f(a + √(2v) x_i)
"""

from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import expit

from .moments import GaussianMoments, MomentsError


GAUSS_HERMITE_ORDER = 40
NEGATIVE_VARIANCE_TOL = 1e-10

_NODES, _WEIGHTS = hermgauss(GAUSS_HERMITE_ORDER)


def projected_moments(moments: GaussianMoments, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """a_n = φⁿᵀm and v_n = φⁿᵀPφⁿ for every column of ``features`` (D x N)"""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] != moments.dim:
        raise MomentsError(f"Features have dimension {features.shape[0]}, moments have {moments.dim}")
    a = features.T @ moments.mean
    v = np.einsum('in,ij,jn->n', features, moments.covariance, features)
    if np.any(v < -NEGATIVE_VARIANCE_TOL):
        raise MomentsError(f"Projected variance {v.min():.3e} is negative")
    return a, np.maximum(v, 0.0)


def scalar_expectation(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """E f(z), z ~ N(a, v), elementwise over the arrays ``a`` and ``v``"""
    a = np.asarray(a, dtype=float)
    v = np.maximum(np.asarray(v, dtype=float), 0.0)
    z = a[..., None] + np.sqrt(2.0 * v)[..., None] * _NODES
    return f(z) @ _WEIGHTS / np.sqrt(np.pi)


def sigmoid_expectations(a: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(E σ(z), E σ(z)(1 - σ(z))) for z ~ N(a, v); negative v is treated as 0"""
    y_bar = scalar_expectation(expit, a, v)
    r_bar = scalar_expectation(lambda z: expit(z) * expit(-z), a, v)
    return y_bar, r_bar


def gaussian_expectations(moments: GaussianMoments, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(E[σ(z_n)], E[σ(z_n)(1 - σ(z_n))]) for each feature column"""
    return sigmoid_expectations(*projected_moments(moments, features))
