"""
Attack dispatch and success evaluation on arbitrary models
"""
from typing import Callable, Optional

import numpy as np

from ..diffnet.gradients import forward_classifier
from ..diffnet.models import AEModel, ClassifierModel
from ..utils.validators import CloudValidator
from .config import AttackConfig
from .losses import is_success
from .outcome import AttackOutcome
from .pgd import pgd_attack
from .soft import soft_attack

# Input transformation applied before classification
Transform = Callable[[np.ndarray], np.ndarray]


def run_attack(
    classifier: ClassifierModel,
    ae: Optional[AEModel],
    points: np.ndarray,
    true_label: int,
    cfg: AttackConfig,
) -> AttackOutcome:
    """Hard or soft attack depending on the configured constraint"""
    attack = pgd_attack if cfg.is_hard else soft_attack
    return attack(classifier, ae, points, true_label, cfg)


def evaluate_attack(
    evaluator: ClassifierModel,
    points: np.ndarray,
    outcome: AttackOutcome,
    true_label: int,
    mode: str,
    defense: Optional[Transform] = None,
) -> bool:
    """
    Classify x + delta (optionally after a defense) with any model and apply
    the success predicate; targeted mode uses the outcome's target label
    """
    points = np.asarray(points)
    CloudValidator.require_same_shape(points, outcome.delta)
    adversarial = points + outcome.delta
    if defense is not None:
        adversarial = defense(adversarial)
    logits = forward_classifier(evaluator, adversarial)
    return is_success(logits, true_label, mode, outcome.target_label)
