from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional


RECIPES = ('recovery', 'rate', 'ood', 'sweep', 'multiclass-demo', 'equilibrium', 'equivalence')
METHODS = ('homotopy', 'second-order', 'stochastic')
PRIOR_KINDS = ('identity', 'random_spd')

DESK_REPEATS = 20
FULL_REPEATS = 100

# Per-recipe ensemble sizes and repeat counts used when the command line gives none
RECIPE_SIZES = {
    'recovery': [10, 100],
    'rate': [50, 100, 200, 400, 800],
    'ood': [200],
    'sweep': [30, 50, 100, 200, 300],
    'multiclass-demo': [100],
    'equilibrium': [400],
    'equivalence': [2000],
}
RECIPE_REPEATS = {'sweep': 5, 'equivalence': 10}


@dataclass
class ExperimentConfig:
    """Configuration for the experiment recipes"""

    recipe: str = 'recovery'
    method: str = 'second-order'
    ensemble_sizes: Optional[List[int]] = None  # RECIPE_SIZES[recipe] when omitted
    repeats: Optional[int] = None  # recipe default, or FULL_REPEATS with full=True
    full: bool = False
    prior_kind: str = 'identity'
    dimension: Optional[int] = None
    num_samples: Optional[int] = None
    horizon: float = 10.0
    step_size: Optional[float] = None
    check_step_size: bool = False
    bins: int = 10
    num_classes: int = 3
    feature_map: Optional[str] = None  # relu for ood, linear otherwise
    dataset_path: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        """Validate configuration after initialization"""
        if self.recipe not in RECIPES:
            raise ValueError(f"Invalid recipe: {self.recipe}. Must be one of {', '.join(RECIPES)}")
        if self.method not in METHODS:
            raise ValueError(f"Invalid method: {self.method}. Must be one of {', '.join(METHODS)}")
        if self.prior_kind not in PRIOR_KINDS:
            raise ValueError(f"Invalid prior kind: {self.prior_kind}. Must be one of {', '.join(PRIOR_KINDS)}")
        if self.ensemble_sizes is None:
            self.ensemble_sizes = list(RECIPE_SIZES[self.recipe])
        if not self.ensemble_sizes or any(j < 1 for j in self.ensemble_sizes):
            raise ValueError("ensemble sizes must be positive integers")
        if self.repeats is None:
            self.repeats = FULL_REPEATS if self.full else RECIPE_REPEATS.get(self.recipe, DESK_REPEATS)
        if self.feature_map is None:
            self.feature_map = 'relu' if self.recipe == 'ood' else 'linear'
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.bins < 1:
            raise ValueError("bins must be at least 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        if self.feature_map not in ('linear', 'relu'):
            raise ValueError(f"Invalid feature map: {self.feature_map}. Must be 'linear' or 'relu'")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")

    @classmethod
    def from_args(cls, args) -> 'ExperimentConfig':
        """Create configuration from command line arguments"""
        return cls(
            recipe=args.recipe,
            method=args.method,
            ensemble_sizes=args.J,
            repeats=args.repeats,
            full=args.full,
            prior_kind=args.prior_kind,
            dimension=args.D,
            num_samples=args.N,
            horizon=args.T,
            step_size=args.dt,
            check_step_size=args.check_dt,
            bins=args.bins,
            num_classes=args.classes,
            feature_map=args.features,
            dataset_path=args.dataset,
            seed=args.seed,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
