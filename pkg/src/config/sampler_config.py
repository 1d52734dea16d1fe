import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional


TAMING_FORMS = ('consistent', 'literal')
STOP_NORMS = ('frobenius', 'spectral')

DEFAULT_HOMOTOPY_STEP = 1e-3
DEFAULT_SECOND_ORDER_STEP = 1e-1
DEFAULT_STOP_THRESHOLD = 1e-4
# Total pseudo-time allowed before the second-order sampler gives up
DEFAULT_TIME_CAP = 30.0
DEFAULT_STOCHASTIC_HORIZON = 10.0


def _check_common(step_size: float, taming_form: str, seed: int) -> None:
    if not step_size > 0 or not math.isfinite(step_size):
        raise ValueError(f"step_size must be positive and finite, got {step_size}")
    if taming_form not in TAMING_FORMS:
        raise ValueError(f"Invalid taming_form: {taming_form}. Must be one of {', '.join(TAMING_FORMS)}")
    if seed < 0:
        raise ValueError("seed must be non-negative")


@dataclass
class HomotopyConfig:
    """Configuration for the homotopy (moment matching) sampler"""

    step_size: float = DEFAULT_HOMOTOPY_STEP
    step_count: Optional[int] = None  # derived from step_size when omitted
    diagonal_inverse: bool = False
    taming_form: str = 'consistent'
    seed: int = 0

    def __post_init__(self):
        """Validate configuration after initialization"""
        _check_common(self.step_size, self.taming_form, self.seed)
        if self.step_count is None:
            self.step_count = max(1, int(round(1.0 / self.step_size)))
        if self.step_count < 1:
            raise ValueError("step_count must be at least 1")
        if abs(self.step_size * self.step_count - 1.0) > 1e-12:
            raise ValueError(
                f"Homotopy must end at s=1: step_size * step_count = "
                f"{self.step_size * self.step_count!r} (step_size={self.step_size}, step_count={self.step_count})"
            )

    @classmethod
    def from_args(cls, args) -> 'HomotopyConfig':
        """Create configuration from command line arguments"""
        return cls(
            step_size=args.dt if args.dt is not None else DEFAULT_HOMOTOPY_STEP,
            step_count=args.steps,
            diagonal_inverse=args.diagonal_inverse,
            taming_form=args.taming_form,
            seed=args.seed,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SecondOrderConfig:
    """Configuration for the deterministic second-order sampler"""

    step_size: float = DEFAULT_SECOND_ORDER_STEP
    stop_threshold: float = DEFAULT_STOP_THRESHOLD
    max_steps: Optional[int] = None  # ceil(DEFAULT_TIME_CAP / step_size) when omitted
    diagonal_inverse: bool = False
    taming_form: str = 'consistent'
    stop_norm: str = 'frobenius'
    seed: int = 0
    # Initial law N(m_prior + offset, scale * P_prior)
    initial_mean_offset: float = 0.0
    initial_cov_scale: float = 1.0

    def __post_init__(self):
        """Validate configuration after initialization"""
        _check_common(self.step_size, self.taming_form, self.seed)
        if not self.stop_threshold > 0:
            raise ValueError(f"stop_threshold must be positive, got {self.stop_threshold}")
        if self.max_steps is None:
            self.max_steps = int(math.ceil(DEFAULT_TIME_CAP / self.step_size))
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.stop_norm not in STOP_NORMS:
            raise ValueError(f"Invalid stop_norm: {self.stop_norm}. Must be one of {', '.join(STOP_NORMS)}")
        if not self.initial_cov_scale > 0:
            raise ValueError("initial_cov_scale must be positive")

    @classmethod
    def from_args(cls, args) -> 'SecondOrderConfig':
        """Create configuration from command line arguments"""
        return cls(
            step_size=args.dt if args.dt is not None else DEFAULT_SECOND_ORDER_STEP,
            stop_threshold=args.eps,
            max_steps=args.max_steps,
            diagonal_inverse=args.diagonal_inverse,
            taming_form=args.taming_form,
            stop_norm=args.stop_norm,
            seed=args.seed,
            initial_mean_offset=getattr(args, 'init_mean_offset', 0.0),
            initial_cov_scale=getattr(args, 'init_cov_scale', 1.0),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StochasticConfig:
    """Configuration for the stochastic second-order (Langevin-type) sampler"""

    step_size: float = DEFAULT_SECOND_ORDER_STEP
    steps: Optional[int] = None  # ceil(DEFAULT_STOCHASTIC_HORIZON / step_size) when omitted
    diagonal_inverse: bool = False
    taming_form: str = 'consistent'
    seed: int = 0
    eigen_floor: float = 1e-12

    def __post_init__(self):
        """Validate configuration after initialization"""
        _check_common(self.step_size, self.taming_form, self.seed)
        if self.steps is None:
            self.steps = int(math.ceil(DEFAULT_STOCHASTIC_HORIZON / self.step_size))
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not 0 <= self.eigen_floor < 1:
            raise ValueError("eigen_floor must lie in [0, 1)")

    @classmethod
    def from_args(cls, args) -> 'StochasticConfig':
        """Create configuration from command line arguments"""
        return cls(
            step_size=args.dt if args.dt is not None else DEFAULT_SECOND_ORDER_STEP,
            steps=args.steps,
            diagonal_inverse=args.diagonal_inverse,
            taming_form=args.taming_form,
            seed=args.seed,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
