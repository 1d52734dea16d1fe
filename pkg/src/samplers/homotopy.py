from typing import Optional

from .base import NumericBlowUpError, RunReport, Sampler, SamplerConfigError, TerminatedBy, guarded_step
from .kernels import ModelLike, as_model, likelihood_step
from ..config import HomotopyConfig
from ..ensemble import Ensemble, compute_stats
from ..models import GaussianPrior, LikelihoodModel
from ..utils.logger import Logger


def homotopy_step(ensemble: Ensemble, data: ModelLike, config: HomotopyConfig, k: int = 0) -> Ensemble:
    """Step k of the homotopy, s_k = k Δs -> s_{k+1}"""
    model = as_model(data)
    return guarded_step(
        lambda: likelihood_step(ensemble, model, config.step_size, config.diagonal_inverse, config.taming_form),
        k, config.step_size,
    )


class HomotopySampler(Sampler):
    """Transports a prior ensemble to the posterior over s ∈ [0, 1] in exactly K steps"""

    name = "homotopy"

    def __init__(self, model: LikelihoodModel, config: HomotopyConfig):
        self.model = model
        self.config = config
        self.logger = Logger.get_logger()

    def run(self, initial: Ensemble) -> RunReport:
        if initial.size < 2:
            raise SamplerConfigError(f"The homotopy sampler needs J >= 2 particles, got {initial.size}")
        if initial.dim != self.model.dim:
            raise SamplerConfigError(
                f"Initial ensemble has dimension {initial.dim}, model expects {self.model.dim}"
            )

        cfg = self.config
        self.logger.info(f"Homotopy: J={initial.size}, D={initial.dim}, Δs={cfg.step_size:g}, K={cfg.step_count}")
        report = RunReport(method=self.name, final_ensemble=initial, config=cfg.to_dict())
        ensemble = initial
        previous = compute_stats(initial).covariance

        for k in range(cfg.step_count):
            try:
                ensemble = homotopy_step(ensemble, self.model, cfg, k)
            except NumericBlowUpError as e:
                e.report = report
                raise
            stats = compute_stats(ensemble)
            report.diagnostics.append(
                self.diagnostics_for(k + 1, (k + 1) * cfg.step_size, stats.mean, previous, stats.covariance)
            )
            report.final_ensemble = ensemble
            previous = stats.covariance
            self.logger.debug(f"step {k + 1}: trace P = {report.diagnostics[-1].covariance_trace:.6g}")

        report.terminated_by = TerminatedBy.HOMOTOPY_END
        self.logger.info(f"Homotopy finished after {report.steps_taken} steps")
        return report


def run_homotopy(initial: Ensemble, data: ModelLike, prior: Optional[GaussianPrior],
                 config: HomotopyConfig) -> RunReport:
    """K tamed moment-matching steps; ``initial`` should be drawn from the prior.

    The prior itself does not enter the homotopy updates; when given it is
    only checked against the model dimension.
    """
    model = as_model(data)
    if prior is not None and prior.dim != model.dim:
        raise SamplerConfigError(f"Prior dimension {prior.dim} does not match model dimension {model.dim}")
    return HomotopySampler(model, config).run(initial)
