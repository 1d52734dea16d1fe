"""Ensemble-size convergence of the second-order particle system to its mean-field limit.

For each J the particle system and the moment ODEs are started from the same
N(m_0, P_0) and run to time T. The error e(J) = ‖m_J - m_T‖₂ + ‖P_J - P_T‖_F
is regressed on J in log-log coordinates; the expected slope is -1/2. For
J <= 200 the exact empirical W₂ to synchronously coupled mean-field
particles is fitted as a cross-check.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import stats

from .base import Experiment, ExperimentConfigError
from .synthetic import synthesize_logistic_dataset
from .wasserstein import MAX_ASSIGNMENT_SIZE, empirical_w2
from ..config import SecondOrderConfig
from ..ensemble import Ensemble, compute_stats
from ..meanfield import GaussianMoments, integrate_moments
from ..models import GaussianPrior, LogisticModel
from ..samplers import SecondOrderSampler, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


# O(Δs) splitting bias must stay below the J = 800 sampling error
RATE_STEP_SIZE = 1e-3
REFERENCE_STEP_SIZE = 0.01
MIN_DISTINCT_SIZES = 4


@dataclass
class RateFit:
    """OLS fit of log error on log J over all raw (J, error) points"""

    ensemble_sizes: List[int]
    errors: List[float]
    slope: float
    intercept: float
    slope_half_width: float  # 95% confidence half-width

    def to_dict(self) -> Dict[str, Any]:
        return {
            'J': self.ensemble_sizes,
            'errors': self.errors,
            'slope': self.slope,
            'intercept': self.intercept,
            'slope_half_width': self.slope_half_width,
        }


def fit_rate(ensemble_sizes: List[int], errors: List[float], min_distinct: int = MIN_DISTINCT_SIZES) -> RateFit:
    sizes = np.asarray(ensemble_sizes, dtype=float)
    values = np.asarray(errors, dtype=float)
    if sizes.shape != values.shape:
        raise ExperimentConfigError("Need one error per ensemble size entry")
    if np.unique(sizes).size < min_distinct:
        raise ExperimentConfigError(f"A rate fit needs at least {min_distinct} distinct J values, got {np.unique(sizes).size}")
    if np.any(values <= 0) or np.any(sizes <= 0):
        raise ExperimentConfigError("Rate fit needs positive J and positive errors")
    fit = stats.linregress(np.log(sizes), np.log(values))
    dof = sizes.size - 2
    half_width = float(stats.t.ppf(0.975, dof) * fit.stderr) if dof > 0 else math.inf
    return RateFit(
        ensemble_sizes=[int(j) for j in sizes],
        errors=values.tolist(),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        slope_half_width=half_width,
    )


def moment_error(particles: np.ndarray, target: GaussianMoments) -> float:
    """‖m_J - m‖₂ + ‖P_J - P‖_F"""
    s = compute_stats(Ensemble(particles))
    return float(np.linalg.norm(s.mean - target.mean) + np.linalg.norm(s.covariance - target.covariance, 'fro'))


@dataclass
class RateStudyResult:
    moment_fit: RateFit
    w2_fit: Optional[RateFit] = None
    mean_field: Optional[GaussianMoments] = None
    raw: List[Dict[str, Any]] = field(default_factory=list)


def meanfield_rate_study(ensemble_sizes: List[int], horizon: float = 10.0, repeats: int = 20, seed: int = 0,
                         dim: int = 5, num_samples: int = 20, step_size: float = RATE_STEP_SIZE,
                         with_w2: bool = True) -> RateStudyResult:
    if len(set(ensemble_sizes)) < MIN_DISTINCT_SIZES:
        raise ExperimentConfigError(
            f"The rate study needs at least {MIN_DISTINCT_SIZES} distinct J values, got {sorted(set(ensemble_sizes))}"
        )
    logger = Logger.get_logger()
    streams = SeedStreams(seed)
    data, _ = synthesize_logistic_dataset(dim, num_samples, streams.generator(SeedStreams.DATASET))
    prior = GaussianPrior.isotropic(dim)
    start = prior.to_moments()
    steps = max(1, int(round(horizon / step_size)))

    reference_step = min(step_size, REFERENCE_STEP_SIZE)
    reference = integrate_moments(start, data, prior, reference_step, horizon).final
    sampler = SecondOrderSampler(LogisticModel(data), prior, SecondOrderConfig(step_size=step_size, seed=seed))
    raw: List[Dict[str, Any]] = []

    for j in ensemble_sizes:
        if j <= dim:
            logger.warning(f"J={j} <= D={dim}: the ensemble covariance is rank deficient")
        for r in range(repeats):
            initial = sample_prior_ensemble(start, j, streams.generator(SeedStreams.INIT_ENSEMBLE, j, r))
            final = sampler.run(initial, fixed_steps=steps).final_ensemble.particles
            row: Dict[str, Any] = {'J': j, 'repeat': r, 'moment_error': moment_error(final, reference)}
            if with_w2 and j <= MAX_ASSIGNMENT_SIZE:
                coupled = integrate_moments(start, data, prior, reference_step, horizon,
                                            particles=initial.particles).particles
                row['w2'] = empirical_w2(final, coupled)
            raw.append(row)
        logger.info(f"Rate study: J={j} done ({repeats} repeats)")

    moment_fit = fit_rate([row['J'] for row in raw], [row['moment_error'] for row in raw])
    w2_rows = [row for row in raw if 'w2' in row]
    w2_fit = None
    if len({row['J'] for row in w2_rows}) >= 3:
        w2_fit = fit_rate([row['J'] for row in w2_rows], [row['w2'] for row in w2_rows], min_distinct=3)
    return RateStudyResult(moment_fit=moment_fit, w2_fit=w2_fit, mean_field=reference, raw=raw)


class RateStudy(Experiment):
    name = "rate"

    def __init__(self, ensemble_sizes: List[int], horizon: float = 10.0, repeats: int = 20, seed: int = 0,
                 dim: int = 5, num_samples: int = 20, step_size: Optional[float] = None):
        self.ensemble_sizes = list(ensemble_sizes)
        self.horizon = horizon
        self.repeats = repeats
        self.seed = seed
        self.dim = dim
        self.num_samples = num_samples
        self.step_size = step_size or RATE_STEP_SIZE
        self.result: Optional[RateStudyResult] = None

    def run(self) -> RateStudyResult:
        self.result = meanfield_rate_study(self.ensemble_sizes, self.horizon, self.repeats, self.seed,
                                           self.dim, self.num_samples, self.step_size)
        return self.result

    def write(self, store: ArtifactStore) -> List[Path]:
        result = self.result
        raw_path = store.write_rows(artifact_name(self.name, 'second-order', None, self.seed, 'csv'),
                                    ['J', 'repeat', 'moment_error', 'w2'], result.raw)
        payload = {
            'experiment': self.name,
            'horizon': self.horizon,
            'step_size': self.step_size,
            'dimension': self.dim,
            'num_samples': self.num_samples,
            'moment_fit': result.moment_fit.to_dict(),
            'w2_fit': result.w2_fit.to_dict() if result.w2_fit else None,
            'mean_field': result.mean_field.to_dict(),
        }
        json_path = store.write_json(artifact_name(self.name, 'second-order', None, self.seed, 'json'), payload)
        return [raw_path, json_path]

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for label, fit in (('moment error', self.result.moment_fit), ('exact W2', self.result.w2_fit)):
            if fit is None:
                continue
            rows.append({
                'metric': label,
                'J': ','.join(str(j) for j in sorted(set(fit.ensemble_sizes))),
                'slope': f"{fit.slope:.3f} ± {fit.slope_half_width:.3f}",
                'intercept': f"{fit.intercept:.3f}",
            })
        return rows
