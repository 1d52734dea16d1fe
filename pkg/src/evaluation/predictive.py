"""Predictive probabilities, confidence, and confidence against distance to the training data."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .base import ExperimentConfigError
from ..ensemble import Ensemble
from ..meanfield import GaussianMoments, probit_predictive
from ..models import class_probabilities, sigmoid


PREDICTIVE_MODES = ('ensemble_avg', 'probit')

Posterior = Union[Ensemble, GaussianMoments]


def _check_features(features: np.ndarray, dim: int) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] == 0:
        raise ExperimentConfigError("Test set is empty")
    if features.shape[0] != dim:
        raise ExperimentConfigError(f"Test features have dimension {features.shape[0]}, posterior has {dim}")
    return features


def predictive_probability(posterior: Posterior, features: np.ndarray, mode: Optional[str] = None) -> np.ndarray:
    """π(d = 1 | φ) for every column of ``features`` (D x M).

    ``ensemble_avg`` averages σ(⟨θ_j, φ⟩) over the particles; ``probit``
    applies the probit approximation to Gaussian moments. The mode defaults
    to the one matching the posterior type.
    """
    if mode is None:
        mode = 'ensemble_avg' if isinstance(posterior, Ensemble) else 'probit'
    if mode not in PREDICTIVE_MODES:
        raise ExperimentConfigError(f"Invalid mode: {mode}. Must be one of {', '.join(PREDICTIVE_MODES)}")
    if mode == 'ensemble_avg':
        if not isinstance(posterior, Ensemble):
            raise ExperimentConfigError("ensemble_avg needs an ensemble")
        features = _check_features(features, posterior.dim)
        return sigmoid(posterior.particles @ features).mean(axis=0)
    if not isinstance(posterior, GaussianMoments):
        raise ExperimentConfigError("probit needs Gaussian moments")
    features = _check_features(features, posterior.dim)
    return np.atleast_1d(probit_predictive(posterior, features))


def predictive_confidence(posterior: Posterior, features: np.ndarray,
                          mode: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(p, max(p, 1 - p)) per test point"""
    p = predictive_probability(posterior, features, mode)
    return p, np.maximum(p, 1.0 - p)


def multiclass_predictive(ensemble: Ensemble, features: np.ndarray,
                          num_classes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Ensemble-averaged class probabilities (M, K) and the confidence max_k π(d = k | φ)"""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] == 0:
        raise ExperimentConfigError("Test set is empty")
    probs = class_probabilities(ensemble.particles, features, num_classes).mean(axis=0)
    return probs, probs.max(axis=1)


def nearest_distance(test_points: np.ndarray, train_points: np.ndarray) -> np.ndarray:
    """δ = min over training points of the Euclidean distance, per test point (points are columns)"""
    return cdist(np.atleast_2d(test_points).T, np.atleast_2d(train_points).T).min(axis=1)


@dataclass
class ConfidenceCurve:
    """Mean and standard deviation of confidence per distance bin; empty bins hold NaN"""

    centers: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    counts: np.ndarray

    def rows(self, label: str) -> List[Dict[str, float]]:
        return [
            {'delta': c, f'{label}_mean': m, f'{label}_std': s, 'count': int(n)}
            for c, m, s, n in zip(self.centers, self.mean, self.std, self.counts)
        ]


def bin_confidence(delta: np.ndarray, confidence: np.ndarray, bins: int) -> ConfidenceCurve:
    """Bin ``confidence`` by ``delta`` over linspace(0, max δ, bins + 1); δ = 0 falls in the first bin"""
    if bins < 1:
        raise ExperimentConfigError("bins must be at least 1")
    top = float(delta.max()) if delta.size else 0.0
    edges = np.linspace(0.0, top if top > 0 else 1.0, bins + 1)
    index = np.clip(np.digitize(delta, edges[1:-1], right=True), 0, bins - 1)
    mean = np.full(bins, np.nan)
    std = np.full(bins, np.nan)
    counts = np.bincount(index, minlength=bins)
    for b in range(bins):
        members = confidence[index == b]
        if members.size:
            mean[b] = members.mean()
            std[b] = members.std()
    return ConfidenceCurve(centers=0.5 * (edges[:-1] + edges[1:]), mean=mean, std=std, counts=counts)


def ood_confidence_curve(posterior: Posterior, train_points: np.ndarray, test_points: np.ndarray, bins: int = 10,
                         feature_map: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                         mode: Optional[str] = None) -> ConfidenceCurve:
    """Confidence against distance δ to the nearest training point.

    Distances are measured between the raw points; ``feature_map`` turns test
    points into the features the posterior lives on (identity when omitted).
    """
    test_points = np.atleast_2d(np.asarray(test_points, dtype=float))
    if test_points.shape[1] == 0:
        raise ExperimentConfigError("Test grid is empty")
    features = feature_map(test_points) if feature_map is not None else test_points
    _, confidence = predictive_confidence(posterior, features, mode)
    return bin_confidence(nearest_distance(test_points, train_points), confidence, bins)
