"""
Hard-constraint projected gradient attack
"""
import logging
import time
from typing import Optional

import numpy as np

from ..config.logging_config import structured_logger
from ..diffnet.models import AEModel, ClassifierModel
from ..geometry import norm_l2, norm_linf, project_l2, project_linf
from ..geometry.torch_ops import project_l2_t, project_linf_t
from ..utils.errors import ConfigurationError
from ..utils.validators import BudgetValidator
from .config import AttackConfig
from .loop import AttackRun
from .outcome import AttackOutcome, BestIterate

logger = logging.getLogger(__name__)

# Largest half-width of the random start of later restarts
RANDOM_START_CAP = 0.05


def pgd_attack(
    classifier: ClassifierModel,
    ae: Optional[AEModel],
    points: np.ndarray,
    true_label: int,
    cfg: AttackConfig,
) -> AttackOutcome:
    """
    Restarted projected Adam under an l-inf or l2 budget
    The first restart starts from zero, later ones from uniform noise of
    half-width min(eps, 0.05) / 2; the returned perturbation is the first
    success with the smallest norm, or the lowest-loss iterate when nothing
    succeeded, and always lies inside the budget
    """
    if not cfg.is_hard:
        raise ConfigurationError(f"pgd_attack needs a hard constraint, got '{cfg.constraint}'")
    epsilon = BudgetValidator.require(cfg.epsilon)

    run = AttackRun(classifier, ae, points, true_label, cfg)
    norm = norm_linf if cfg.constraint == "linf" else norm_l2
    best = BestIterate()
    budget = epsilon
    started = time.perf_counter()

    for restart in range(cfg.n_restarts):
        if cfg.constraint == "linf":
            def project(delta, bound=budget):
                return project_linf_t(delta, bound)
        else:
            def project(delta, bound=budget):
                return project_l2_t(delta, bound)

        start = project(run.initial_delta(restart, min(budget, RANDOM_START_CAP) / 2.0))
        run.descend(start, restart, best, project, score=lambda delta, _distance: norm(delta))

        if cfg.shrink_budget and best.success:
            budget = min(budget, cfg.shrink_factor * best.score)
            logger.debug(f"restart {restart}: budget shrunk to {budget:.5f}")

    final = project_linf(best.delta, epsilon) if cfg.constraint == "linf" else project_l2(best.delta, epsilon)
    outcome = run.finish(final, best.loss, best.target)

    structured_logger.log_performance(
        "pgd_attack",
        (time.perf_counter() - started) * 1000,
        constraint=cfg.constraint,
        epsilon=epsilon,
        gamma=cfg.gamma,
        success=outcome.success_victim,
    )
    return outcome
