"""Mean-field moment ODEs for the Gaussian law N(m_s, P_s).

second_order:
    dm/ds = -P Φ (ȳ - d) - P P_prior⁻¹ (m - m_prior)
    dP/ds = -P Φ diag(r̄) Φᵀ P - P P_prior⁻¹ P + P
homotopy (s ∈ [0, 1]):
    dm/ds = -P Φ (ȳ - d)
    dP/ds = -P Φ diag(r̄) Φᵀ P

where ȳ, r̄ are the Gaussian expectations of σ and σ(1 - σ). Optionally a set
of mean-field particles η^j is carried along; each follows the particle ODE
with the mean-field moments in place of empirical ones, so started from the
same draws as a particle ensemble it gives a synchronous coupling.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .moments import GaussianMoments, MomentsError
from .quadrature import gaussian_expectations, sigmoid_expectations
from ..exceptions import NumericError
from ..models import Dataset, GaussianPrior, LabelError
from ..utils.artifacts import ArtifactStore
from ..utils.logger import Logger


VARIANTS = ('homotopy', 'second_order')
INSTABILITY_TOL = 1e-8


class IntegratorInstabilityError(NumericError):
    """The integrated covariance lost positive semidefiniteness or became non-finite"""
    pass


@dataclass
class MomentTrajectory:
    """Moments at every step of an integration, plus the coupled particles at the end"""

    variant: str
    times: List[float] = field(default_factory=list)
    means: List[np.ndarray] = field(default_factory=list)
    covariances: List[np.ndarray] = field(default_factory=list)
    particles: Optional[np.ndarray] = None

    @property
    def final(self) -> GaussianMoments:
        return GaussianMoments(self.means[-1], self.covariances[-1])

    def moments_at(self, index: int) -> GaussianMoments:
        return GaussianMoments(self.means[index], self.covariances[index])

    def to_csv(self, store: ArtifactStore, name: str, data: Optional[Dataset] = None,
               prior: Optional[GaussianPrior] = None) -> Path:
        """Columns s, m_i, P_i_j (upper triangle) and, given data and prior, res_m and res_P"""
        dim = self.means[0].size
        iu = np.triu_indices(dim)
        header = ['s'] + [f"m_{i}" for i in range(dim)] + [f"P_{i}_{j}" for i, j in zip(*iu)]
        with_residuals = data is not None and prior is not None
        if with_residuals:
            header += ['res_m', 'res_P']
        rows = []
        for s, m, p in zip(self.times, self.means, self.covariances):
            row = [s, *m, *p[iu]]
            if with_residuals:
                row += list(equilibrium_residual(GaussianMoments(m, p), data, prior))
            rows.append(row)
        return store.write_matrix(name, header, np.array(rows))


def _require_binary(data: Dataset) -> None:
    if not data.is_binary:
        raise LabelError("Mean-field moment equations are defined for binary labels")


def _expectations(mean: np.ndarray, cov: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # Unvalidated moments: RK stages may sit marginally outside the PSD cone
    return sigmoid_expectations(phi.T @ mean, np.einsum('in,ij,jn->n', phi, cov, phi))


def _prior_terms(prior: GaussianPrior, mean: np.ndarray, cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return cov @ prior.solve(mean - prior.mean), cov @ prior.solve(cov)


def moment_ode_rhs(moments: GaussianMoments, data: Dataset, prior: Optional[GaussianPrior] = None,
                   variant: str = 'second_order') -> Tuple[np.ndarray, np.ndarray]:
    """(dm/ds, dP/ds) at ``moments``; dP is symmetrised after assembly"""
    return _rhs(moments.mean, moments.covariance, data, prior, variant)


def _rhs(mean: np.ndarray, cov: np.ndarray, data: Dataset, prior: Optional[GaussianPrior],
         variant: str) -> Tuple[np.ndarray, np.ndarray]:
    if variant not in VARIANTS:
        raise MomentsError(f"Invalid variant: {variant}. Must be one of {', '.join(VARIANTS)}")
    if variant == 'second_order' and prior is None:
        raise MomentsError("The second-order moment equations need a prior")
    _require_binary(data)
    phi = data.features
    y_bar, r_bar = _expectations(mean, cov, phi)
    p_phi = cov @ phi
    dm = -p_phi @ (y_bar - data.labels)
    dp = -(p_phi * r_bar) @ p_phi.T
    if variant == 'second_order':
        pull, contraction = _prior_terms(prior, mean, cov)
        dm = dm - pull
        dp = dp - contraction + cov
    return dm, 0.5 * (dp + dp.T)


def _particle_rhs(particles: np.ndarray, mean: np.ndarray, cov: np.ndarray, data: Dataset,
                  prior: Optional[GaussianPrior], variant: str) -> np.ndarray:
    """Mean-field particle velocities, particles given as (J, D)"""
    phi = data.features
    y_bar, r_bar = _expectations(mean, cov, phi)
    p_phi = cov @ phi
    dev = particles.T - mean[:, None]
    if variant == 'homotopy':
        velocity = -(p_phi @ (y_bar - data.labels))[:, None] - 0.5 * (p_phi * r_bar) @ (phi.T @ dev)
    else:
        likelihood = (phi * r_bar) @ (phi.T @ dev) + 2.0 * (phi @ (y_bar - data.labels))[:, None]
        pull = prior.solve(particles.T + mean[:, None] - 2.0 * prior.mean[:, None])
        velocity = -0.5 * cov @ (likelihood + pull) + 0.5 * dev
    return velocity.T


class _Stepper:
    """Classical fourth-order Runge-Kutta on (m, P, η) with P symmetrised after every stage"""

    def __init__(self, data: Dataset, prior: Optional[GaussianPrior], variant: str):
        self.data = data
        self.prior = prior
        self.variant = variant

    def derivative(self, state):
        mean, cov, particles = state
        dm, dp = _rhs(mean, cov, self.data, self.prior, self.variant)
        dq = None if particles is None else _particle_rhs(particles, mean, cov, self.data, self.prior, self.variant)
        return dm, dp, dq

    @staticmethod
    def _shift(state, slope, h):
        mean, cov, particles = state
        dm, dp, dq = slope
        cov = cov + h * dp
        return (mean + h * dm, 0.5 * (cov + cov.T), None if particles is None else particles + h * dq)

    def step(self, state, h: float):
        k1 = self.derivative(state)
        k2 = self.derivative(self._shift(state, k1, h / 2))
        k3 = self.derivative(self._shift(state, k2, h / 2))
        k4 = self.derivative(self._shift(state, k3, h))
        mean, cov, particles = state
        combine = lambda a, b, c, d: (a + 2 * b + 2 * c + d) / 6.0  # noqa: E731
        new_cov = cov + h * combine(k1[1], k2[1], k3[1], k4[1])
        return (
            mean + h * combine(k1[0], k2[0], k3[0], k4[0]),
            0.5 * (new_cov + new_cov.T),
            None if particles is None else particles + h * combine(k1[2], k2[2], k3[2], k4[2]),
        )


def _check_state(mean: np.ndarray, cov: np.ndarray, step: int, time: float) -> None:
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise IntegratorInstabilityError(f"Moments became non-finite at step {step} (s={time:g})")
    smallest = float(scipy.linalg.eigvalsh(cov).min())
    if smallest < -INSTABILITY_TOL:
        raise IntegratorInstabilityError(
            f"Covariance eigenvalue {smallest:.3e} < -{INSTABILITY_TOL:g} at step {step} (s={time:g}); "
            f"reduce the step size"
        )


def integrate_moments(initial: GaussianMoments, data: Dataset, prior: Optional[GaussianPrior],
                      step_size: float, horizon: float, variant: str = 'second_order',
                      particles: Optional[np.ndarray] = None) -> MomentTrajectory:
    """Integrate the moment ODEs from ``initial`` to s = horizon with fixed-step RK4.

    The number of steps is round(horizon / step_size) and the step is adjusted
    so that the last one lands on the horizon. The homotopy variant requires
    horizon = 1.
    """
    if not step_size > 0:
        raise MomentsError(f"step_size must be positive, got {step_size}")
    if not horizon > 0:
        raise MomentsError(f"horizon must be positive, got {horizon}")
    if variant == 'homotopy' and abs(horizon - 1.0) > 1e-12:
        raise MomentsError(f"The homotopy flow runs over s ∈ [0, 1], got horizon {horizon}")
    if particles is not None:
        particles = np.atleast_2d(np.asarray(particles, dtype=float))
        if particles.shape[1] != initial.dim:
            raise MomentsError(f"Particles have dimension {particles.shape[1]}, moments have {initial.dim}")

    steps = max(1, int(round(horizon / step_size)))
    h = horizon / steps
    stepper = _Stepper(data, prior, variant)
    logger = Logger.get_logger()
    logger.debug(f"Integrating {variant} moment ODEs: {steps} RK4 steps of {h:g}")

    trajectory = MomentTrajectory(variant=variant)
    state = (initial.mean.copy(), initial.covariance.copy(), particles)
    trajectory.times.append(0.0)
    trajectory.means.append(state[0])
    trajectory.covariances.append(state[1])
    for k in range(steps):
        state = stepper.step(state, h)
        time = (k + 1) * h
        _check_state(state[0], state[1], k + 1, time)
        trajectory.times.append(time)
        trajectory.means.append(state[0])
        trajectory.covariances.append(state[1])
    trajectory.particles = state[2]
    return trajectory


def integrate_to_stationarity(initial: GaussianMoments, data: Dataset, prior: GaussianPrior,
                              step_size: float = 0.05, tol: float = 1e-10,
                              max_time: float = 2000.0) -> Tuple[GaussianMoments, float]:
    """Run the second-order flow until ‖dm‖ and ‖dP‖_F fall below ``tol``; returns (moments, s)"""
    stepper = _Stepper(data, prior, 'second_order')
    state = (initial.mean.copy(), initial.covariance.copy(), None)
    max_steps = int(np.ceil(max_time / step_size))
    for k in range(max_steps):
        dm, dp = _rhs(state[0], state[1], data, prior, 'second_order')
        if np.linalg.norm(dm) < tol and np.linalg.norm(dp, 'fro') < tol:
            return GaussianMoments(state[0], state[1]), k * step_size
        state = stepper.step(state, step_size)
        _check_state(state[0], state[1], k + 1, (k + 1) * step_size)
    raise IntegratorInstabilityError(f"Moment flow did not become stationary within s={max_time:g}")


def equilibrium_residual(moments: GaussianMoments, data: Dataset, prior: GaussianPrior) -> Tuple[float, float]:
    """Residuals of the second-order fixed-point equations.

    res_m = ‖m - m_prior + P_prior Φ (ȳ - d)‖ / (1 + ‖m‖)
    res_P = ‖P⁻¹ - Φ diag(r̄) Φᵀ - P_prior⁻¹‖_F / ‖P⁻¹‖_F
    """
    _require_binary(data)
    phi = data.features
    y_bar, r_bar = gaussian_expectations(moments, phi)
    m = moments.mean
    res_m = np.linalg.norm(m - prior.mean + prior.covariance @ (phi @ (y_bar - data.labels))) / (1.0 + np.linalg.norm(m))
    try:
        precision = scipy.linalg.cho_solve(scipy.linalg.cho_factor(moments.covariance), np.eye(moments.dim))
    except np.linalg.LinAlgError as e:
        raise MomentsError(f"Covariance is singular, no precision for the residual: {e}") from e
    prior_precision = prior.solve(np.eye(prior.dim))
    gap = precision - (phi * r_bar) @ phi.T - prior_precision
    res_p = np.linalg.norm(gap, 'fro') / np.linalg.norm(precision, 'fro')
    return float(res_m), float(res_p)
