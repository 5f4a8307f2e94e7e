"""
Attack outcomes and norm accounting
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry import EMD_EXACT_CAP, chamfer, emd, norm_l2, norm_linf


@dataclass(frozen=True)
class NormReport:
    """Distortion of x + delta against x, recomputed from delta"""
    linf: float
    l2: float
    chamfer_directed: float
    chamfer_symmetric: float
    emd: Optional[float] = None

    @classmethod
    def measure(cls, points: np.ndarray, delta: np.ndarray) -> "NormReport":
        adversarial = points + delta
        return cls(
            linf=norm_linf(delta),
            l2=norm_l2(delta),
            chamfer_directed=chamfer(points, adversarial, "directed"),
            chamfer_symmetric=chamfer(points, adversarial, "symmetric"),
            # exact EMD only where the assignment solver is tractable
            emd=emd(adversarial, points) if len(points) <= EMD_EXACT_CAP else None,
        )


@dataclass(frozen=True)
class AttackOutcome:
    delta: np.ndarray
    success_victim: bool
    success_ae: Optional[bool]
    predicted_label: int
    target_label: Optional[int]
    iterations_to_first_success: Optional[int]
    norms: NormReport
    loss: float


class BestIterate:
    """
    Running record of the best perturbation seen by an attack loop
    Any success beats any failure; among successes the smaller score wins,
    among failures the lower loss wins; ties keep the earlier iterate
    """

    def __init__(self):
        self.delta: Optional[np.ndarray] = None
        self.success = False
        self.score = float("inf")
        self.loss = float("inf")
        self.target: Optional[int] = None

    def offer(self, delta: np.ndarray, success: bool, score: float, loss: float, target: Optional[int]) -> bool:
        """Returns True if the iterate was recorded"""
        if success:
            better = not self.success or score < self.score
        else:
            better = not self.success and loss < self.loss

        if better or self.delta is None:
            self.delta = delta.copy()
            self.success = success
            self.score = score
            self.loss = loss
            self.target = target
            return True
        return False
