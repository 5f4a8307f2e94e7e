"""
Projections of perturbations onto norm balls
"""
import numpy as np

from ..utils.validators import BudgetValidator
from .metrics import norm_l2

# Float32 shrink step applied when rounding leaves a scaled result outside the ball
_SHRINK = np.float32(1.0) - np.float32(4.0) * np.finfo(np.float32).eps


def project_linf(delta: np.ndarray, eps: float) -> np.ndarray:
    """Clamp every coordinate into [-eps, eps]"""
    eps = BudgetValidator.require(eps)
    delta = np.asarray(delta, dtype=np.float32)
    bound = np.float32(eps)
    return np.clip(delta, -bound, bound)


def project_l2(delta: np.ndarray, eps: float) -> np.ndarray:
    """Scale the perturbation onto the l2 ball: delta * eps / max(||delta||, eps)"""
    eps = BudgetValidator.require(eps)
    delta = np.asarray(delta, dtype=np.float32)
    norm = norm_l2(delta)
    if norm <= eps:
        return delta.copy()

    scaled = (delta.astype(np.float64) * (eps / norm)).astype(np.float32)
    # Keep the result inside the ball so a second projection is the identity
    while norm_l2(scaled) > eps:
        scaled = scaled * _SHRINK
    return scaled
