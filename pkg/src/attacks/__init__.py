"""
Adversarial attacks package
"""

from .config import PRESETS, AttackConfig, preset
from .evaluation import evaluate_attack, run_attack
from .losses import advpc_loss, is_success, margin_loss, select_untargeted_target
from .outcome import AttackOutcome, NormReport
from .pgd import pgd_attack
from .soft import soft_attack

__all__ = [
    'PRESETS', 'AttackConfig', 'preset', 'evaluate_attack', 'run_attack',
    'advpc_loss', 'is_success', 'margin_loss', 'select_untargeted_target',
    'AttackOutcome', 'NormReport', 'pgd_attack', 'soft_attack',
]
