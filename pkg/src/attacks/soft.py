"""
Soft-constraint attack with a binary search over the distance weight
"""
import logging
import time
from typing import Optional, Tuple

import numpy as np
import torch

from ..config.logging_config import structured_logger
from ..diffnet.models import AEModel, ClassifierModel
from ..geometry import emd_matching
from ..geometry.torch_ops import chamfer_t, l2_t, matched_emd_t
from ..utils.errors import ConfigurationError
from .config import LAMBDA_MAX, LAMBDA_MIN, AttackConfig
from .loop import AttackRun, Penalty
from .outcome import AttackOutcome, BestIterate

logger = logging.getLogger(__name__)

# Half-width of the random start of later restarts
SOFT_RANDOM_START = 0.01


def _penalty(run: AttackRun, cfg: AttackConfig) -> Penalty:
    points = run.points_t[0]

    if cfg.soft_distance == "l2":
        return lambda delta, _iteration: l2_t(delta)

    if cfg.soft_distance == "chamfer":
        return lambda delta, _iteration: chamfer_t(points, points + delta[0])

    # EMD through a matching recomputed every emd_refresh iterations
    matching = {}

    def emd_penalty(delta: torch.Tensor, iteration: int) -> torch.Tensor:
        adversarial = points + delta[0]
        if iteration % cfg.emd_refresh == 0 or "perm" not in matching:
            perm = emd_matching(adversarial.detach().numpy(), points.numpy(), approximate=cfg.emd_approximate)
            matching["perm"] = torch.from_numpy(perm)
        return matched_emd_t(adversarial, points, matching["perm"])

    return emd_penalty


def next_lambda(lam: float, success: bool, lower: Optional[float], upper: Optional[float]) -> float:
    """
    Success raises the weight, failure lowers it: x10 / /10 until both
    a succeeding and a failing weight are known, then bisection
    """
    if lower is not None and upper is not None:
        return (lower + upper) / 2.0
    stepped = lam * 10.0 if success else lam / 10.0
    return min(max(stepped, LAMBDA_MIN), LAMBDA_MAX)


def update_bracket(
    lam: float, success: bool, lower: Optional[float], upper: Optional[float]
) -> Tuple[Optional[float], Optional[float]]:
    """
    lower is the largest succeeding weight, upper the smallest failing one
    A result that contradicts the bracket drops the opposite bound
    """
    if success:
        lower = lam if lower is None else max(lower, lam)
        if upper is not None and upper <= lower:
            upper = None
    else:
        upper = lam if upper is None else min(upper, lam)
        if lower is not None and lower >= upper:
            lower = None
    return lower, upper


def soft_attack(
    classifier: ClassifierModel,
    ae: Optional[AEModel],
    points: np.ndarray,
    true_label: int,
    cfg: AttackConfig,
) -> AttackOutcome:
    """
    Minimize the margin objective plus lambda * D(x, x + delta)
    Returns the success with the smallest recorded distance over all rounds,
    or the lowest-loss iterate of the last round
    """
    if cfg.is_hard:
        raise ConfigurationError(f"soft_attack needs a soft constraint, got '{cfg.constraint}'")

    run = AttackRun(classifier, ae, points, true_label, cfg)
    penalty = _penalty(run, cfg)

    lam = cfg.soft_lambda
    lower: Optional[float] = None
    upper: Optional[float] = None
    winner: Optional[BestIterate] = None
    round_best = BestIterate()
    started = time.perf_counter()

    for step in range(cfg.binary_steps):
        round_best = BestIterate()
        for restart in range(cfg.n_restarts):
            start = run.initial_delta(restart, SOFT_RANDOM_START)
            run.descend(
                start,
                restart,
                round_best,
                project=lambda delta: delta,
                score=lambda _delta, distance: distance,
                penalty=penalty,
                weight=lam,
            )

        lower, upper = update_bracket(lam, round_best.success, lower, upper)
        if round_best.success and (winner is None or round_best.score < winner.score):
            winner = round_best
        logger.debug(f"binary step {step}: lambda={lam:g} success={round_best.success}")
        lam = next_lambda(lam, round_best.success, lower, upper)

    chosen = winner if winner is not None else round_best
    outcome = run.finish(chosen.delta, chosen.loss, chosen.target)

    structured_logger.log_performance(
        "soft_attack",
        (time.perf_counter() - started) * 1000,
        distance=cfg.soft_distance,
        final_lambda=lam,
        gamma=cfg.gamma,
        success=outcome.success_victim,
    )
    return outcome
