"""Synthetic datasets for the recovery, OOD and multiclass experiments."""

from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from .base import ExperimentConfigError
from ..models import Dataset
from ..utils.seeding import SeedStreams


RandomSource = Union[int, np.random.Generator]

MAX_LABEL_REDRAWS = 100
# test grids span the training bounding box enlarged by this factor
GRID_SCALE = 3.0


def _rng(seed: RandomSource) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return SeedStreams(seed).generator(SeedStreams.DATASET)


def synthesize_logistic_dataset(dim: int = 20, num_samples: int = 300, seed: RandomSource = 0,
                                theta_ref: Optional[np.ndarray] = None) -> Tuple[Dataset, np.ndarray]:
    """Known-parameter logistic data: θ_ref, x_n ~ N(0, I), Φ(x) = x, dⁿ ~ Bernoulli(σ(⟨θ_ref, x_n⟩)).

    ``theta_ref`` overrides the drawn reference parameter. Labels that come
    out all-0 or all-1 are re-drawn from the same stream.
    """
    if dim < 1 or num_samples < 1:
        raise ExperimentConfigError(f"Dataset needs D >= 1 and N >= 1, got D={dim}, N={num_samples}")
    rng = _rng(seed)
    drawn = rng.standard_normal(dim)
    theta = drawn if theta_ref is None else np.asarray(theta_ref, dtype=float).reshape(dim)
    features = rng.standard_normal((dim, num_samples))
    probs = expit(theta @ features)
    for _ in range(MAX_LABEL_REDRAWS):
        labels = (rng.random(num_samples) < probs).astype(int)
        if num_samples == 1 or 0 < labels.sum() < num_samples:
            return Dataset(features, labels), theta
    raise ExperimentConfigError(f"Labels stayed degenerate after {MAX_LABEL_REDRAWS} draws")


def relu_features(points: np.ndarray, directions: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """One-layer ReLU lift of 2 x M points: unit k is max(0, ⟨w_k, x - c_k⟩).

    Stands in for the trained last-layer feature map of a network.
    """
    points = np.atleast_2d(points)
    return np.maximum(directions @ points - np.sum(directions * anchors, axis=1, keepdims=True), 0.0)


class FeatureMap:
    """Linear features plus a bias row, optionally preceded by a fixed random ReLU lift.

    The ReLU lift has to be fitted to the training points first: unit directions
    are uniform on the circle and the anchors c_k uniform over the training
    bounding box enlarged by ``scale``, the region the test grid covers. Units
    whose active half-plane misses the training data see no likelihood, so their
    weights keep the prior spread and the predictive variance grows away from
    the data.
    """

    def __init__(self, kind: str = 'linear', width: int = 32, seed: int = 0):
        if kind not in ('linear', 'relu'):
            raise ExperimentConfigError(f"Invalid feature map: {kind}. Must be 'linear' or 'relu'")
        if width < 1:
            raise ExperimentConfigError(f"Feature map width must be positive, got {width}")
        self.kind = kind
        self.width = width
        self.seed = seed
        self.directions: Optional[np.ndarray] = None
        self.anchors: Optional[np.ndarray] = None

    def fit(self, points: np.ndarray, scale: float = GRID_SCALE) -> 'FeatureMap':
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind != 'relu':
            return self
        if points.shape[0] != 2:
            raise ExperimentConfigError(f"The ReLU lift takes 2-D points, got D={points.shape[0]}")
        # Same seed, same lift for training and test points
        rng = SeedStreams(self.seed).generator("feature-map")
        angles = rng.uniform(0.0, 2.0 * np.pi, self.width)
        self.directions = np.column_stack([np.cos(angles), np.sin(angles)])
        lower, upper = points.min(axis=1), points.max(axis=1)
        center, half = (lower + upper) / 2.0, scale * (upper - lower) / 2.0
        self.anchors = rng.uniform(center - half, center + half, size=(self.width, 2))
        return self

    @property
    def fitted(self) -> bool:
        return self.kind == 'linear' or self.anchors is not None

    def untrained_units(self, points: np.ndarray) -> np.ndarray:
        """Indices of ReLU units that are zero on every one of ``points``"""
        if self.kind != 'relu':
            return np.array([], dtype=int)
        return np.flatnonzero(~self._lift(points).any(axis=1))

    def _lift(self, points: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise ExperimentConfigError("The ReLU feature map must be fitted to the training points before use")
        return relu_features(points, self.directions, self.anchors)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == 'relu':
            points = self._lift(points)
        return np.vstack([points, np.ones((1, points.shape[1]))])


def make_two_clusters(num_samples: int = 200, seed: RandomSource = 0, separation: float = 3.0,
                      spread: float = 0.7) -> Tuple[np.ndarray, np.ndarray]:
    """Two Gaussian clusters in the plane at (±separation/2, 0); returns (2 x N points, {0,1} labels)"""
    rng = _rng(seed)
    labels = np.arange(num_samples) % 2
    centers = np.where(labels == 1, separation / 2.0, -separation / 2.0)
    points = np.vstack([centers, np.zeros(num_samples)]) + spread * rng.standard_normal((2, num_samples))
    return points, labels


def make_blobs_multiclass(num_classes: int = 3, num_samples: int = 300, seed: RandomSource = 0,
                          radius: float = 3.0, spread: float = 0.7) -> Tuple[np.ndarray, np.ndarray]:
    """K Gaussian blobs on a circle of ``radius``; labels in {1, ..., K}"""
    if num_classes < 2:
        raise ExperimentConfigError("Need at least two classes")
    rng = _rng(seed)
    labels = np.arange(num_samples) % num_classes + 1
    angles = 2.0 * np.pi * (labels - 1) / num_classes
    centers = radius * np.vstack([np.cos(angles), np.sin(angles)])
    return centers + spread * rng.standard_normal((2, num_samples)), labels


def grid_points(points: np.ndarray, resolution: int = 200, scale: float = GRID_SCALE) -> np.ndarray:
    """Uniform resolution x resolution grid over the bounding box of 2-D ``points`` enlarged by ``scale``"""
    lower, upper = points.min(axis=1), points.max(axis=1)
    center, half = (lower + upper) / 2.0, scale * (upper - lower) / 2.0
    xs = np.linspace(center[0] - half[0], center[0] + half[0], resolution)
    ys = np.linspace(center[1] - half[1], center[1] + half[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    return np.vstack([gx.ravel(), gy.ravel()])


def radial_test_points(features: np.ndarray, radii: np.ndarray, per_radius: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Points at distance ``r`` from the training centroid along random directions, for D > 2"""
    center = features.mean(axis=1, keepdims=True)
    blocks = []
    for r in np.atleast_1d(radii):
        directions = rng.standard_normal((features.shape[0], per_radius))
        directions /= np.linalg.norm(directions, axis=0, keepdims=True)
        blocks.append(center + r * directions)
    return np.hstack(blocks)
