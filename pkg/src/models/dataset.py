from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional

import numpy as np
import scipy.linalg

from .base import LabelError, ModelError, PriorError
from ..utils.artifacts import ArtifactStore

if TYPE_CHECKING:
    from ..meanfield.moments import GaussianMoments


LABEL_COLUMN = 'label'


class Dataset:
    """Features Φ (D x N, one column per sample) and labels d (N,).

    Binary datasets carry labels in {0, 1}; multiclass datasets carry labels in
    {1, ..., K}.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, num_classes: int = 2):
        phi = np.atleast_2d(np.asarray(features, dtype=float))
        d = np.asarray(labels).reshape(-1)
        if phi.shape[1] < 1:
            raise ModelError("Dataset needs at least one sample (N >= 1)")
        if phi.shape[1] != d.size:
            raise ModelError(f"Features have {phi.shape[1]} columns but there are {d.size} labels")
        if not np.isfinite(phi).all():
            raise ModelError("Features contain non-finite entries")
        if num_classes < 2:
            raise ModelError("num_classes must be at least 2")
        if not np.all(np.equal(np.mod(d, 1), 0)):
            raise LabelError("Labels must be integers")
        d = d.astype(int)
        allowed = (0, 1) if num_classes == 2 else tuple(range(1, num_classes + 1))
        bad = ~np.isin(d, allowed)
        if bad.any():
            raise LabelError(f"Label {d[bad][0]} at sample {int(np.argmax(bad))} is outside {allowed}")
        phi.setflags(write=False)
        d.setflags(write=False)
        self.features = phi
        self.labels = d
        self.num_classes = num_classes

    @property
    def dim(self) -> int:
        return self.features.shape[0]

    @property
    def size(self) -> int:
        return self.features.shape[1]

    @property
    def is_binary(self) -> bool:
        return self.num_classes == 2

    def header(self) -> List[str]:
        return [f"phi_{i}" for i in range(self.dim)] + [LABEL_COLUMN]

    def to_csv(self, store: ArtifactStore, name: str) -> Path:
        """One sample per row: D feature columns then the label column"""
        rows = np.column_stack([self.features.T, self.labels.astype(float)])
        return store.write_matrix(name, self.header(), rows)

    @classmethod
    def from_csv(cls, path: Path, num_classes: Optional[int] = None) -> 'Dataset':
        """Load a dataset file; the class count is inferred from the labels unless given"""
        header, data = ArtifactStore.read_matrix(path)
        if not header or header[-1] != LABEL_COLUMN:
            raise ModelError(f"{path}: last column must be '{LABEL_COLUMN}'")
        if data.shape[0] < 1:
            raise ModelError(f"{path}: no samples")
        labels = data[:, -1]
        if num_classes is None:
            values = set(np.unique(labels))
            if values <= {0.0, 1.0}:
                num_classes = 2
            elif labels.min() >= 1 and labels.max() >= 3:
                num_classes = int(labels.max())
            else:
                raise LabelError(
                    f"{path}: labels {sorted(values)} fit neither binary 0/1 nor multiclass 1..K with K >= 3; "
                    f"two-class data must use labels 0 and 1")
        return cls(data[:, :-1].T, labels, num_classes)

    def __repr__(self) -> str:
        return f"Dataset(D={self.dim}, N={self.size}, K={self.num_classes})"


def load_feature_matrix(path: Path) -> np.ndarray:
    """Test features from CSV as D x M; a trailing label column is ignored"""
    header, data = ArtifactStore.read_matrix(path)
    if header and header[-1] == LABEL_COLUMN:
        data = data[:, :-1]
    return data.T


@dataclass(frozen=True, eq=False)
class GaussianPrior:
    """Prior N(m_prior, P_prior) with P_prior symmetric positive definite.

    The precision is only ever applied through Cholesky solves.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise PriorError(f"Prior mean of dimension {mean.size} does not match covariance of shape {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(np.abs(cov).max(), 1.0)):
            raise PriorError("Prior covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            factor = scipy.linalg.cho_factor(cov, lower=True)
        except np.linalg.LinAlgError as e:
            raise PriorError(f"Prior covariance is not positive definite: {e}") from e
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', cov)
        object.__setattr__(self, '_factor', factor)

    @classmethod
    def isotropic(cls, dim: int, scale: float = 1.0, mean: Optional[np.ndarray] = None) -> 'GaussianPrior':
        """N(mean or 0, scale * I)"""
        if dim < 1:
            raise PriorError("Prior dimension must be positive")
        return cls(np.zeros(dim) if mean is None else mean, scale * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def is_diagonal(self) -> bool:
        return bool(np.count_nonzero(self.covariance - np.diag(np.diag(self.covariance))) == 0)

    @property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor L with P_prior = L Lᵀ"""
        return np.tril(self._factor[0])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """P_prior^{-1} rhs"""
        return scipy.linalg.cho_solve(self._factor, rhs)

    def quadratic(self, theta: np.ndarray) -> float:
        """½ (θ - m)ᵀ P_prior^{-1} (θ - m)"""
        diff = np.asarray(theta, dtype=float) - self.mean
        return 0.5 * float(diff @ self.solve(diff))

    def block_diagonal(self, blocks: int) -> 'GaussianPrior':
        """Independent copies for a stacked parameter (θ_1, ..., θ_K)"""
        return GaussianPrior(np.tile(self.mean, blocks), scipy.linalg.block_diag(*([self.covariance] * blocks)))

    def to_moments(self) -> 'GaussianMoments':
        from ..meanfield.moments import GaussianMoments
        return GaussianMoments(self.mean, self.covariance)

    def header(self) -> List[str]:
        return [f"p_{i}" for i in range(self.dim)]

    def to_csv(self, store: ArtifactStore, name: str) -> Path:
        """Covariance as a D x D CSV with header p_0..p_{D-1}"""
        return store.write_matrix(name, self.header(), self.covariance)

    @classmethod
    def from_csv(cls, path: Path, mean: Optional[np.ndarray] = None) -> 'GaussianPrior':
        _, cov = ArtifactStore.read_matrix(path)
        if cov.shape[0] != cov.shape[1]:
            raise PriorError(f"{path}: prior covariance must be square, got {cov.shape}")
        return cls(np.zeros(cov.shape[0]) if mean is None else mean, cov)


def random_spd_prior(dim: int, rng: np.random.Generator) -> GaussianPrior:
    """Zero-mean prior with covariance (AᵀA)/D + 1e-3 I, A standard normal"""
    a = rng.standard_normal((dim, dim))
    cov = a.T @ a / dim + 1e-3 * np.eye(dim)
    return GaussianPrior(np.zeros(dim), 0.5 * (cov + cov.T))
