"""
Defenses package
"""

from .adversarial import adversarial_training
from .config import DEFENSE_KINDS, DefenseConfig, apply_defense
from .transforms import ae_defense, sor_defense, srs_defense

__all__ = [
    'adversarial_training', 'DEFENSE_KINDS', 'DefenseConfig', 'apply_defense',
    'ae_defense', 'sor_defense', 'srs_defense',
]
