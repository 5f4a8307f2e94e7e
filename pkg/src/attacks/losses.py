"""
Margin loss, target selection and the combined adversarial objective
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from ..diffnet.gradients import locate_numeric_failure, model_dtype
from ..diffnet.models import AEModel, ClassifierModel
from ..utils.errors import ConfigurationError, InvalidArgumentError, NumericFailureError, ValidationError
from ..utils.validators import CloudValidator, LabelValidator
from .config import AttackConfig


def margin_loss(logits: np.ndarray, t_prime: int, kappa: float) -> float:
    """max(max_{i != t'} z_i - z_t' + kappa, 0)"""
    z = np.asarray(logits, dtype=np.float64)
    LabelValidator.require(t_prime, z.shape[0])
    if kappa < 0:
        raise InvalidArgumentError(f"kappa must be non-negative, got {kappa}")

    others = np.delete(z, t_prime)
    return float(max(others.max() - z[t_prime] + kappa, 0.0))


def margin_loss_t(logits: torch.Tensor, t_prime: int, kappa: float) -> torch.Tensor:
    """Differentiable margin loss on a K-vector; the competing logit is the lowest-index maximum"""
    masked = logits.detach().clone()
    masked[t_prime] = -float("inf")
    other = int(torch.argmax(masked))
    return torch.clamp(logits[other] - logits[t_prime] + kappa, min=0.0)


def select_untargeted_target(logits: np.ndarray, true_label: int) -> int:
    """Highest-scoring label other than the true one, lowest index on ties"""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[0] < 2:
        raise InvalidArgumentError(f"need at least 2 classes, got {z.shape[0]}")
    LabelValidator.require(true_label, z.shape[0])

    masked = z.copy()
    masked[true_label] = -np.inf
    return int(np.argmax(masked))


def is_success(logits: np.ndarray, true_label: int, mode: str, target: Optional[int] = None) -> bool:
    """Untargeted: prediction differs from the true label; targeted: prediction is the target"""
    predicted = int(np.argmax(logits))
    if mode == "targeted":
        return predicted == target
    return predicted != true_label


def resolve_target(cfg: AttackConfig, k_classes: int, true_label: int) -> Optional[int]:
    LabelValidator.require(true_label, k_classes)
    if cfg.mode != "targeted":
        return None
    if cfg.target is None:
        raise ConfigurationError("targeted attack needs a target label")
    return LabelValidator.require(cfg.target, k_classes)


def require_ae(cfg: AttackConfig, ae: Optional[AEModel]) -> None:
    if cfg.use_ae and ae is None:
        raise ConfigurationError(f"gamma={cfg.gamma} needs an autoencoder")


def as_tensor(array: np.ndarray, dtype: torch.dtype) -> torch.Tensor:
    """Validated N x 3 array as a 1 x N x 3 tensor; keeps float64 inputs exact for float64 models"""
    array = np.asarray(array)
    is_valid, error_msg = CloudValidator.validate(array)
    if not is_valid:
        raise ValidationError(f"cloud: {error_msg}")
    return torch.as_tensor(array).to(dtype)[None]


@dataclass
class ObjectiveTerms:
    loss: torch.Tensor
    victim_logits: np.ndarray
    ae_logits: Optional[np.ndarray]
    target: int
    ae_target: Optional[int]


def adversarial_objective(
    classifier: ClassifierModel,
    ae: Optional[AEModel],
    points: torch.Tensor,
    delta: torch.Tensor,
    cfg: AttackConfig,
    true_label: int,
    target: Optional[int],
) -> ObjectiveTerms:
    """
    (1 - gamma) * f_t'(F(x + delta)) + gamma * f_t''(F(G(x + delta)))
    Untargeted t' and t'' are re-selected from the current logits of their branch;
    with gamma == 0 the autoencoder is never evaluated
    """
    adversarial = points + delta
    victim_logits = classifier(adversarial)[0]
    victim_np = victim_logits.detach().double().numpy()
    t_prime = target if target is not None else select_untargeted_target(victim_np, true_label)

    if cfg.gamma < 1.0:
        loss = (1.0 - cfg.gamma) * margin_loss_t(victim_logits, t_prime, cfg.kappa)
    else:
        loss = victim_logits.new_zeros(())

    ae_np, t_second = None, None
    if cfg.gamma > 0.0:
        require_ae(cfg, ae)
        ae_logits = classifier(ae(adversarial))[0]
        ae_np = ae_logits.detach().double().numpy()
        t_second = target if target is not None else select_untargeted_target(ae_np, true_label)
        loss = loss + cfg.gamma * margin_loss_t(ae_logits, t_second, cfg.kappa)

    return ObjectiveTerms(loss, victim_np, ae_np, t_prime, t_second)


def diagnose_failure(classifier: ClassifierModel, ae: Optional[AEModel], adversarial: torch.Tensor) -> NumericFailureError:
    """Name the first layer producing a non-finite value on the victim or the autoencoder branch"""
    failure = locate_numeric_failure(classifier, adversarial)
    if failure.layer != "loss" or ae is None:
        return failure

    ae_failure = locate_numeric_failure(ae, adversarial)
    if ae_failure.layer != "loss":
        return NumericFailureError(f"autoencoder.{ae_failure.layer}")

    with torch.no_grad():
        reconstruction = ae(adversarial)
    return locate_numeric_failure(classifier, reconstruction)


def advpc_loss(
    classifier: ClassifierModel,
    ae: Optional[AEModel],
    points: np.ndarray,
    delta: np.ndarray,
    cfg: AttackConfig,
    true_label: int,
) -> Tuple[float, np.ndarray]:
    """
    Combined objective value and its gradient with respect to delta
    Returns: (loss, gradient with the shape of delta)
    """
    require_ae(cfg, ae)
    target = resolve_target(cfg, classifier.k_classes, true_label)

    dtype = model_dtype(classifier)
    points_t = as_tensor(points, dtype)
    delta_t = as_tensor(delta, dtype)
    if points_t.shape != delta_t.shape:
        raise ValidationError(f"perturbation shape {tuple(delta_t.shape[1:])} does not match cloud {tuple(points_t.shape[1:])}")
    delta_t.requires_grad_(True)

    terms = adversarial_objective(classifier, ae, points_t, delta_t, cfg, true_label, target)
    if not torch.isfinite(terms.loss):
        raise diagnose_failure(classifier, ae, (points_t + delta_t).detach())

    (grad,) = torch.autograd.grad(terms.loss, delta_t, allow_unused=True)
    if grad is None:
        return float(terms.loss), np.zeros(delta_t.shape[1:], dtype=np.asarray(delta).dtype)
    if not torch.isfinite(grad).all():
        raise NumericFailureError("input")
    return float(terms.loss), grad[0].detach().numpy()
