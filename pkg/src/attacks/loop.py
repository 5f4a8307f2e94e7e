"""
Projected Adam descent shared by the hard and soft attacks
"""
import logging
from typing import Callable, Optional

import numpy as np
import torch

from ..diffnet.gradients import forward_ae, forward_classifier, model_dtype
from ..diffnet.models import AEModel, ClassifierModel
from ..diffnet.optim import AdamState, adam_update
from ..utils.errors import InvalidArgumentError, NumericFailureError
from .config import AttackConfig
from .losses import adversarial_objective, as_tensor, diagnose_failure, is_success, require_ae, resolve_target
from .outcome import AttackOutcome, BestIterate, NormReport

logger = logging.getLogger(__name__)

# delta -> delta inside the feasible set
Projection = Callable[[torch.Tensor], torch.Tensor]
# (delta, iteration) -> unweighted distance term
Penalty = Callable[[torch.Tensor, int], torch.Tensor]
# (delta, distance value) -> score used to rank successes
Score = Callable[[np.ndarray, float], float]


class AttackRun:
    """One attack on one sample: owns its generator, optimizer states and records"""

    def __init__(
        self,
        classifier: ClassifierModel,
        ae: Optional[AEModel],
        points: np.ndarray,
        true_label: int,
        cfg: AttackConfig,
    ):
        require_ae(cfg, ae)
        self.classifier = classifier
        self.ae = ae
        self.cfg = cfg
        self.true_label = int(true_label)
        self.target = resolve_target(cfg, classifier.k_classes, self.true_label)
        if self.target is not None and self.target == self.true_label:
            raise InvalidArgumentError(f"target label {self.target} equals the true label")

        self.points = np.asarray(points)
        self.points_t = as_tensor(self.points, model_dtype(classifier))
        self.generator = torch.Generator().manual_seed(cfg.seed)
        self.steps = 0
        self.first_success: Optional[int] = None

    def initial_delta(self, restart: int, scale: float) -> torch.Tensor:
        """Zero for the first restart, uniform in +-scale afterwards"""
        shape = self.points_t.shape
        if restart == 0 or scale == 0:
            return torch.zeros(shape, dtype=self.points_t.dtype)
        noise = torch.rand(shape, generator=self.generator, dtype=torch.float64) * 2.0 - 1.0
        return (noise * scale).to(self.points_t.dtype)

    def descend(
        self,
        delta: torch.Tensor,
        restart: int,
        best: BestIterate,
        project: Projection,
        score: Score,
        penalty: Optional[Penalty] = None,
        weight: float = 0.0,
    ) -> torch.Tensor:
        """
        T Adam steps with projection after each update
        Every iterate, including the starting point and the final one, is
        offered to best before the next update
        """
        cfg = self.cfg
        state = AdamState.zeros_like({"delta": delta})

        for iteration in range(cfg.iterations + 1):
            needs_grad = iteration < cfg.iterations
            with torch.set_grad_enabled(needs_grad):
                delta_var = delta.detach().requires_grad_(needs_grad)
                terms = adversarial_objective(
                    self.classifier, self.ae, self.points_t, delta_var, cfg, self.true_label, self.target
                )
                total = terms.loss
                distance = 0.0
                if penalty is not None:
                    distance_t = penalty(delta_var, iteration)
                    total = total + weight * distance_t
                    distance = float(distance_t)

            if not torch.isfinite(total):
                failure = diagnose_failure(self.classifier, self.ae, (self.points_t + delta).detach())
                raise failure.annotate(restart, iteration)

            delta_np = delta.detach()[0].numpy()
            success = is_success(terms.victim_logits, self.true_label, cfg.mode, self.target)
            if success and self.first_success is None:
                self.first_success = self.steps
            best.offer(delta_np, success, score(delta_np, distance), float(total), terms.target)
            self.steps += 1

            if not needs_grad:
                break

            (grad,) = torch.autograd.grad(total, delta_var)
            if not torch.isfinite(grad).all():
                raise NumericFailureError("input").annotate(restart, iteration)

            state, updated = adam_update(state, {"delta": delta}, {"delta": grad}, cfg.lr)
            delta = project(updated["delta"])

        return delta

    def finish(self, delta: np.ndarray, loss: float, target: Optional[int]) -> AttackOutcome:
        """Outcome with flags and norms recomputed from the returned perturbation"""
        delta = np.asarray(delta, dtype=np.float32)
        adversarial = self.points + delta

        victim_logits = forward_classifier(self.classifier, adversarial)
        success_victim = is_success(victim_logits, self.true_label, self.cfg.mode, self.target)
        success_ae = None
        if self.ae is not None:
            ae_logits = forward_classifier(self.classifier, forward_ae(self.ae, adversarial))
            success_ae = is_success(ae_logits, self.true_label, self.cfg.mode, self.target)

        return AttackOutcome(
            delta=delta,
            success_victim=success_victim,
            success_ae=success_ae,
            predicted_label=int(np.argmax(victim_logits)),
            target_label=self.target if self.target is not None else target,
            iterations_to_first_success=self.first_success,
            norms=NormReport.measure(self.points, delta),
            loss=loss,
        )
