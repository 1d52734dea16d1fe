from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..ensemble import Ensemble
from ..exceptions import EnsembleLogRegError, NumericError, StructuralError
from ..utils.artifacts import ArtifactStore


class TerminatedBy(str, Enum):
    THRESHOLD = "threshold"
    STEP_CAP = "step_cap"
    HOMOTOPY_END = "homotopy_end"
    HORIZON = "horizon"


@dataclass
class StepDiagnostics:
    """Quantities recorded after step ``step`` (pseudo-time ``time``)"""

    step: int
    time: float
    stop_criterion: float  # ‖P_{k+1} - P_k‖ / ‖P_k‖
    mean_norm: float
    covariance_trace: float
    covariance_asymmetry: float  # max|P - Pᵀ| / max|P|
    covariance_min_eigenvalue: float


@dataclass
class RunReport:
    """Outcome of one sampler run"""

    method: str
    final_ensemble: Ensemble
    diagnostics: List[StepDiagnostics] = field(default_factory=list)
    terminated_by: Optional[TerminatedBy] = None
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def steps_taken(self) -> int:
        return len(self.diagnostics)

    @property
    def flagged(self) -> bool:
        """True when the second-order sampler hit its step cap before converging"""
        return self.terminated_by == TerminatedBy.STEP_CAP

    def to_dict(self, ensemble_path: Optional[Path] = None) -> Dict[str, Any]:
        return {
            'method': self.method,
            'steps_taken': self.steps_taken,
            'terminated_by': self.terminated_by.value if self.terminated_by else None,
            'seed': self.config.get('seed'),
            'config': self.config,
            'ensemble_size': self.final_ensemble.size,
            'dimension': self.final_ensemble.dim,
            'final_ensemble': str(ensemble_path.name) if ensemble_path else None,
            'diagnostics': [asdict(d) for d in self.diagnostics],
        }

    def write(self, store: ArtifactStore, stem: str) -> Path:
        """Write ``{stem}.csv`` (final ensemble) and ``{stem}.json`` (report); returns the JSON path"""
        ensemble_path = self.final_ensemble.to_csv(store, f"{stem}.csv")
        return store.write_json(f"{stem}.json", self.to_dict(ensemble_path))


class Sampler(ABC):
    """Abstract base class for the interacting-particle samplers"""

    name: str = ""

    @abstractmethod
    def run(self, initial: Ensemble) -> RunReport:
        """Evolve ``initial`` and report the outcome"""
        pass

    @staticmethod
    def relative_change(previous: np.ndarray, current: np.ndarray, norm: str = 'frobenius') -> float:
        """‖current - previous‖ / ‖previous‖, defined as 0 when both vanish"""
        diff = _matrix_norm(current - previous, norm)
        base = _matrix_norm(previous, norm)
        if base == 0.0:
            return 0.0 if diff == 0.0 else float('inf')
        return diff / base

    @staticmethod
    def diagnostics_for(step: int, time: float, mean: np.ndarray, previous_cov: np.ndarray,
                        covariance: np.ndarray, norm: str = 'frobenius') -> StepDiagnostics:
        return StepDiagnostics(
            step=step,
            time=time,
            stop_criterion=Sampler.relative_change(previous_cov, covariance, norm),
            mean_norm=float(np.linalg.norm(mean)),
            covariance_trace=float(np.trace(covariance)),
            covariance_asymmetry=_relative_asymmetry(covariance),
            covariance_min_eigenvalue=float(np.linalg.eigvalsh(covariance).min()),
        )


def spectral_norm(matrix: np.ndarray, max_iter: int = 200, tol: float = 1e-12) -> float:
    """Largest singular value of a symmetric matrix by power iteration"""
    a = np.asarray(matrix, dtype=float)
    if not a.any():
        return 0.0
    v = np.random.default_rng(0).standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = a @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return estimate
        v = w / norm_w
        if abs(norm_w - estimate) <= tol * norm_w:
            return norm_w
        estimate = norm_w
    return estimate


def _relative_asymmetry(matrix: np.ndarray) -> float:
    scale = float(np.abs(matrix).max())
    return float(np.abs(matrix - matrix.T).max()) / scale if scale > 0.0 else 0.0


def _matrix_norm(matrix: np.ndarray, norm: str) -> float:
    if norm == 'spectral':
        return spectral_norm(matrix)
    return float(np.linalg.norm(matrix, 'fro'))


class SamplerError(EnsembleLogRegError):
    """Base exception for sampler errors"""
    pass


class SamplerConfigError(SamplerError, StructuralError):
    """Sampler inputs are inconsistent (dimensions, ensemble size)"""
    pass


class SamplerSolveError(SamplerError, NumericError):
    """A linear solve inside a sampler step failed"""
    pass


class NumericBlowUpError(SamplerError, NumericError):
    """Particles became non-finite or left the 1e8 ball"""

    def __init__(self, step: int, step_size: float, detail: str = "",
                 report: Optional[RunReport] = None):
        self.step = step
        self.step_size = step_size
        self.report = report
        message = f"Ensemble blew up at step {step} with step size {step_size:g}"
        if detail:
            message += f" ({detail})"
        super().__init__(message + "; try a smaller step size")


BLOW_UP_NORM = 1e8


def guarded_step(advance: Callable[[], Ensemble], step: int, step_size: float) -> Ensemble:
    """Run one update, converting numeric failures and runaway particles into NumericBlowUpError"""
    try:
        ensemble = advance()
    except NumericBlowUpError:
        raise
    except NumericError as e:
        raise NumericBlowUpError(step, step_size, str(e)) from e
    largest = float(np.linalg.norm(ensemble.particles, axis=1).max())
    if largest > BLOW_UP_NORM:
        raise NumericBlowUpError(step, step_size, f"particle norm {largest:.3g} exceeds {BLOW_UP_NORM:g}")
    return ensemble
