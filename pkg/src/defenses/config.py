"""
Defense configuration and dispatch
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..diffnet.models import AEModel
from ..utils.errors import ConfigurationError, UnsupportedDefenseError
from .transforms import ae_defense, sor_defense, srs_defense

DEFENSE_KINDS = ("sor", "srs", "ae_reconstruct", "adversarial_training", "dup_net")
# Reserved names that are recognized but not implemented
UNSUPPORTED_KINDS = ("dup_net",)


@dataclass(frozen=True)
class DefenseConfig:
    kind: str
    k: int = 2
    alpha: float = 1.1
    drop_rate: float = 0.1
    mix_fraction: float = 0.5
    attack_preset: str = "adv_training"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DEFENSE_KINDS:
            raise ConfigurationError(f"unknown defense '{self.kind}', expected one of {DEFENSE_KINDS}")
        if self.k < 1:
            raise ConfigurationError(f"SOR k must be >= 1, got {self.k}")
        if self.alpha < 0:
            raise ConfigurationError(f"SOR alpha must be non-negative, got {self.alpha}")
        if not 0.0 <= self.drop_rate < 1.0:
            raise ConfigurationError(f"drop_rate must lie in [0, 1), got {self.drop_rate}")
        if not 0.0 < self.mix_fraction <= 1.0:
            raise ConfigurationError(f"mix_fraction must lie in (0, 1], got {self.mix_fraction}")

    @property
    def is_supported(self) -> bool:
        return self.kind not in UNSUPPORTED_KINDS


def apply_defense(
    cfg: DefenseConfig,
    points: np.ndarray,
    defense_ae: Optional[AEModel] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Run an input-transformation defense; seed overrides cfg.seed for SRS"""
    if not cfg.is_supported:
        raise UnsupportedDefenseError(f"defense '{cfg.kind}' is reserved but not supported")

    if cfg.kind == "sor":
        return sor_defense(points, cfg.k, cfg.alpha)
    if cfg.kind == "srs":
        return srs_defense(points, cfg.drop_rate, cfg.seed if seed is None else seed)
    if cfg.kind == "ae_reconstruct":
        if defense_ae is None:
            raise ConfigurationError("ae_reconstruct defense needs a defense autoencoder")
        return ae_defense(defense_ae, points)

    raise ConfigurationError(f"'{cfg.kind}' is a training-time defense, not an input transformation")
