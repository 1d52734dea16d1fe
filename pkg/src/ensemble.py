"""Particle ensembles and their empirical statistics.

The covariance uses the 1/J normalisation throughout (not the unbiased
1/(J-1) estimator), so that P = Θ Θᵀ / J holds exactly for the deviation
matrix Θ that the samplers evolve.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List

import numpy as np

from .exceptions import NumericError, StructuralError
from .utils.artifacts import ArtifactStore


class EnsembleShapeError(StructuralError):
    """Particles do not form a J x D array of the expected size"""
    pass


class NonFiniteEnsembleError(NumericError):
    """A particle, or a function evaluated on one, is not finite"""
    pass


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Empirical mean (D,), deviations (D, J) and covariance (D, D)"""

    mean: np.ndarray
    deviations: np.ndarray
    covariance: np.ndarray


class Ensemble:
    """An immutable cloud of J particles in R^D, stored row-wise as (J, D)"""

    def __init__(self, particles: np.ndarray):
        array = np.array(particles, dtype=float, copy=True)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise EnsembleShapeError(f"Particles must form a non-empty (J, D) array, got shape {np.shape(particles)}")
        bad = ~np.isfinite(array).all(axis=1)
        if bad.any():
            raise NonFiniteEnsembleError(f"Particle {int(np.argmax(bad))} is not finite")
        array.setflags(write=False)
        self._particles = array

    @classmethod
    def from_particle_list(cls, particles: List[np.ndarray]) -> 'Ensemble':
        """Build from a list of vectors, checking they share one dimension"""
        dims = {np.asarray(p).shape for p in particles}
        if len(dims) != 1:
            raise EnsembleShapeError(f"Particles have mismatched shapes: {sorted(dims)}")
        return cls(np.vstack([np.asarray(p, dtype=float) for p in particles]))

    @classmethod
    def from_mean_and_deviations(cls, mean: np.ndarray, deviations: np.ndarray) -> 'Ensemble':
        """Reconstruct θ^j = m + Θ[:, j]"""
        return cls((np.asarray(mean)[:, None] + np.asarray(deviations)).T)

    @property
    def particles(self) -> np.ndarray:
        return self._particles

    @property
    def size(self) -> int:
        return self._particles.shape[0]

    @property
    def dim(self) -> int:
        return self._particles.shape[1]

    def mean(self) -> np.ndarray:
        return self._particles.mean(axis=0)

    def header(self) -> List[str]:
        return [f"theta_{i}" for i in range(self.dim)]

    def to_csv(self, store: ArtifactStore, name: str) -> Path:
        """One particle per row, header theta_0..theta_{D-1}"""
        return store.write_matrix(name, self.header(), self._particles)

    @classmethod
    def from_csv(cls, path: Path) -> 'Ensemble':
        header, data = ArtifactStore.read_matrix(path)
        expected = [f"theta_{i}" for i in range(len(header))]
        if header != expected:
            raise EnsembleShapeError(f"{path}: expected header {','.join(expected)}")
        return cls(data)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Ensemble(J={self.size}, D={self.dim})"


def compute_stats(ensemble: Ensemble) -> EnsembleStats:
    """Empirical mean, deviations Θ (D x J) and covariance Θ Θᵀ / J"""
    if ensemble.size < 2:
        raise EnsembleShapeError(f"Covariance needs at least two particles, got J={ensemble.size}")
    particles = ensemble.particles
    mean = particles.mean(axis=0)
    deviations = (particles - mean).T
    covariance = deviations @ deviations.T / ensemble.size
    covariance = 0.5 * (covariance + covariance.T)
    return EnsembleStats(mean=mean, deviations=deviations, covariance=covariance)


def empirical_expectation(ensemble: Ensemble, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """(1/J) Σ_j f(θ^j) for f: R^D -> R^K"""
    values = []
    for j, theta in enumerate(ensemble.particles):
        value = np.atleast_1d(np.asarray(f(theta), dtype=float))
        if not np.isfinite(value).all():
            raise NonFiniteEnsembleError(f"f is not finite at particle {j}")
        values.append(value)
    shapes = {v.shape for v in values}
    if len(shapes) != 1:
        raise EnsembleShapeError(f"f returned inconsistent shapes {sorted(shapes)}")
    return np.mean(values, axis=0)
