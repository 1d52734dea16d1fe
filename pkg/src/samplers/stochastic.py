from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .base import NumericBlowUpError, RunReport, Sampler, SamplerConfigError, TerminatedBy, guarded_step
from .kernels import ModelLike, as_model, likelihood_step, prior_relax_step
from ..config import StochasticConfig
from ..ensemble import Ensemble, compute_stats
from ..models import GaussianPrior, LikelihoodModel
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


# Maps (J, D) to a (J, D) array of standard normal draws
NoiseSource = Callable[[int, int], np.ndarray]


def covariance_sqrt(covariance: np.ndarray, eigen_floor: float = 1e-12) -> np.ndarray:
    """Symmetric square root; eigenvalues below eigen_floor·λ_max are set to zero"""
    eigvals, eigvecs = scipy.linalg.eigh(covariance)
    top = max(float(eigvals.max()), 0.0)
    eigvals = np.where(eigvals < eigen_floor * top, 0.0, eigvals)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return 0.5 * (root + root.T)


def generator_noise(rng: np.random.Generator) -> NoiseSource:
    return lambda j, d: rng.standard_normal((j, d))


class StochasticSampler(Sampler):
    """Euler-Maruyama version of the second-order system driven by P^{1/2} dW.

    Each step applies the tamed likelihood step, the prior relaxation without
    the spread term, and then adds √Δs · P_k^{1/2} ξ^j with P_k frozen at the
    start of the step.
    """

    name = "stochastic"

    def __init__(self, model: LikelihoodModel, prior: GaussianPrior, config: StochasticConfig,
                 noise: Optional[NoiseSource] = None):
        if prior.dim != model.dim:
            raise SamplerConfigError(f"Prior dimension {prior.dim} does not match model dimension {model.dim}")
        self.model = model
        self.prior = prior
        self.config = config
        if noise is None:
            noise = generator_noise(SeedStreams(config.seed).generator(SeedStreams.NOISE))
        self.noise = noise
        self.logger = Logger.get_logger()

    def step(self, ensemble: Ensemble, k: int) -> Ensemble:
        cfg = self.config

        def advance() -> Ensemble:
            root = covariance_sqrt(compute_stats(ensemble).covariance, cfg.eigen_floor)
            half = likelihood_step(ensemble, self.model, cfg.step_size, cfg.diagonal_inverse, cfg.taming_form)
            drifted = prior_relax_step(half, self.prior, cfg.step_size, cfg.diagonal_inverse, spread=False)
            xi = np.asarray(self.noise(ensemble.size, ensemble.dim), dtype=float)
            if xi.shape != (ensemble.size, ensemble.dim):
                raise SamplerConfigError(f"Noise source returned shape {xi.shape}, expected {(ensemble.size, ensemble.dim)}")
            return Ensemble(drifted.particles + np.sqrt(cfg.step_size) * (xi @ root))

        return guarded_step(advance, k, cfg.step_size)

    def run(self, initial: Ensemble) -> RunReport:
        if initial.size < 2:
            raise SamplerConfigError(f"The stochastic sampler needs J >= 2 particles, got {initial.size}")
        if initial.dim != self.model.dim:
            raise SamplerConfigError(
                f"Initial ensemble has dimension {initial.dim}, model expects {self.model.dim}"
            )
        if initial.size <= initial.dim:
            self.logger.warning(f"J={initial.size} <= D={initial.dim}: the ensemble covariance is rank deficient")

        cfg = self.config
        self.logger.info(f"Stochastic: J={initial.size}, D={initial.dim}, Δs={cfg.step_size:g}, steps={cfg.steps}")
        report = RunReport(method=self.name, final_ensemble=initial, config=cfg.to_dict())
        ensemble = initial
        previous = compute_stats(initial).covariance

        for k in range(cfg.steps):
            try:
                ensemble = self.step(ensemble, k)
            except NumericBlowUpError as e:
                e.report = report
                raise
            stats = compute_stats(ensemble)
            report.diagnostics.append(
                self.diagnostics_for(k + 1, (k + 1) * cfg.step_size, stats.mean, previous, stats.covariance)
            )
            report.final_ensemble = ensemble
            previous = stats.covariance

        report.terminated_by = TerminatedBy.HORIZON
        return report


def run_stochastic_second_order(initial: Ensemble, data: ModelLike, prior: GaussianPrior,
                                config: StochasticConfig, noise: Optional[NoiseSource] = None) -> RunReport:
    """Stochastic comparator for the deterministic second-order sampler"""
    return StochasticSampler(as_model(data), prior, config, noise).run(initial)
