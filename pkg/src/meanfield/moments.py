from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

import numpy as np

from ..exceptions import StructuralError
from ..utils.artifacts import ArtifactStore


class MomentsError(StructuralError):
    """Mean/covariance pair is malformed or not positive semidefinite"""
    pass


SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Mean m (D,) and symmetric positive semidefinite covariance P (D, D)"""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise MomentsError(f"Mean of shape {mean.shape} does not match covariance of shape {cov.shape}")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise MomentsError("Moments contain non-finite entries")
        scale = max(float(np.abs(cov).max()), 1.0)
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise MomentsError("Covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if cov.size and np.linalg.eigvalsh(cov).min() < -PSD_TOL * max(np.linalg.norm(cov, 2), 1.0):
            raise MomentsError("Covariance has a negative eigenvalue")
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean.tolist(), 'covariance': self.covariance.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'GaussianMoments':
        try:
            return cls(np.asarray(payload['mean']), np.asarray(payload['covariance']))
        except KeyError as e:
            raise MomentsError(f"Moments document lacks field {e}") from e

    def to_json(self, store: ArtifactStore, name: str) -> Path:
        return store.write_json(name, self.to_dict())

    @classmethod
    def from_json(cls, path: Path) -> 'GaussianMoments':
        return cls.from_dict(ArtifactStore.read_json(path))
