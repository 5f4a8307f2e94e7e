"""
Attack configuration and named presets
"""
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

from ..utils.errors import ConfigurationError
from ..utils.validators import BudgetValidator

MODES = ("untargeted", "targeted")
CONSTRAINTS = ("linf", "l2", "soft")
SOFT_DISTANCES = ("l2", "chamfer", "emd")

# Binary search range for the soft-constraint weight
LAMBDA_MIN, LAMBDA_MAX = 1e-2, 1e6


@dataclass(frozen=True)
class AttackConfig:
    """Full hyperparameters of one attack run"""
    mode: str = "untargeted"
    target: Optional[int] = None
    constraint: str = "linf"
    epsilon: float = 0.18

    # Soft constraint
    soft_lambda: float = 10.0
    soft_distance: str = "chamfer"
    binary_steps: int = 5
    emd_refresh: int = 10
    emd_approximate: bool = False

    # Objective
    gamma: float = 0.25
    kappa: float = 30.0

    # Optimizer
    lr: float = 0.01
    iterations: int = 200
    n_restarts: int = 2
    seed: int = 0

    # Hard-norm shrinking across restarts
    shrink_budget: bool = False
    shrink_factor: float = 0.9

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown attack mode '{self.mode}', expected one of {MODES}")
        if self.constraint not in CONSTRAINTS:
            raise ConfigurationError(f"unknown constraint '{self.constraint}', expected one of {CONSTRAINTS}")
        if self.soft_distance not in SOFT_DISTANCES:
            raise ConfigurationError(f"unknown soft distance '{self.soft_distance}', expected one of {SOFT_DISTANCES}")

        is_valid, error_msg = BudgetValidator.validate(self.epsilon)
        if not is_valid:
            raise ConfigurationError(f"epsilon: {error_msg}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.kappa < 0:
            raise ConfigurationError(f"kappa must be non-negative, got {self.kappa}")
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.iterations < 1 or self.n_restarts < 1 or self.binary_steps < 1 or self.emd_refresh < 1:
            raise ConfigurationError("iterations, n_restarts, binary_steps and emd_refresh must be >= 1")
        if self.soft_lambda < 0:
            raise ConfigurationError(f"soft_lambda must be non-negative, got {self.soft_lambda}")
        if not 0.0 < self.shrink_factor <= 1.0:
            raise ConfigurationError(f"shrink_factor must lie in (0, 1], got {self.shrink_factor}")

    @property
    def use_ae(self) -> bool:
        return self.gamma > 0

    @property
    def is_hard(self) -> bool:
        return self.constraint != "soft"

    @property
    def norm_type(self) -> str:
        """Budget column label: linf, l2 or soft_<distance>"""
        return self.constraint if self.is_hard else f"soft_{self.soft_distance}"

    def with_(self, **overrides: Any) -> "AttackConfig":
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


PRESETS: Dict[str, AttackConfig] = {
    "advpc": AttackConfig(constraint="linf", gamma=0.25, kappa=30.0),
    "baseline": AttackConfig(constraint="linf", gamma=0.0, kappa=30.0),
    "knn_chamfer": AttackConfig(constraint="soft", soft_distance="chamfer", gamma=0.0, kappa=15.0),
    "soft_l2": AttackConfig(constraint="soft", soft_distance="l2", gamma=0.0),
    "soft_emd": AttackConfig(constraint="soft", soft_distance="emd", gamma=0.0, emd_approximate=True),
    "adv_training": AttackConfig(constraint="linf", gamma=0.0, iterations=50, n_restarts=1),
}


def preset(name: str, **overrides: Any) -> AttackConfig:
    """Named preset with optional field overrides"""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown attack preset '{name}', expected one of {sorted(PRESETS)}")
    return PRESETS[name].with_(**overrides)
