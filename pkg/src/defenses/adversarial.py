"""
Adversarial training with attacks regenerated against the live model
"""
import logging
from typing import Union

import torch

from ..attacks.config import AttackConfig, preset
from ..config.logging_config import structured_logger
from ..diffnet.models import ClassifierModel
from ..diffnet.optim import AdamState, adam_update
from ..diffnet.training import BatchHook, TrainConfig, train_classifier
from ..utils.errors import ConfigurationError, InvalidArgumentError

logger = logging.getLogger(__name__)


def batch_margin_loss(logits: torch.Tensor, labels: torch.Tensor, kappa: float) -> torch.Tensor:
    """Summed untargeted margin loss over a batch; t' is the best wrong label of each row"""
    rows = torch.arange(logits.shape[0])
    masked = logits.detach().clone()
    masked[rows, labels] = -float("inf")
    targets = masked.argmax(dim=1)

    competing = logits.detach().clone()
    competing[rows, targets] = -float("inf")
    others = competing.argmax(dim=1)
    return torch.clamp(logits[rows, others] - logits[rows, targets] + kappa, min=0.0).sum()


def _project_batch(delta: torch.Tensor, constraint: str, epsilon: float) -> torch.Tensor:
    if constraint == "linf":
        return torch.clamp(delta, -epsilon, epsilon)
    norms = torch.linalg.vector_norm(delta.double(), dim=(1, 2), keepdim=True)
    scale = torch.where(norms > epsilon, epsilon / norms.clamp_min(1e-30), torch.ones_like(norms))
    return (delta.double() * scale).to(delta.dtype)


def batch_hard_attack(
    model: ClassifierModel,
    clouds: torch.Tensor,
    labels: torch.Tensor,
    cfg: AttackConfig,
) -> torch.Tensor:
    """
    Zero-start projected Adam on a whole batch at once (gamma = 0, untargeted)
    Adam is elementwise, so this equals attacking each sample separately;
    returns the final perturbed clouds
    """
    delta = torch.zeros_like(clouds)
    state = AdamState.zeros_like({"delta": delta})
    for _ in range(cfg.iterations):
        delta_var = delta.detach().requires_grad_(True)
        loss = batch_margin_loss(model(clouds + delta_var), labels, cfg.kappa)
        (grad,) = torch.autograd.grad(loss, delta_var)
        state, updated = adam_update(state, {"delta": delta}, {"delta": grad}, cfg.lr)
        delta = _project_batch(updated["delta"], cfg.constraint, cfg.epsilon)
    return (clouds + delta).detach()


def adversarial_training(
    data,
    attack_preset: Union[str, AttackConfig] = "adv_training",
    mix_fraction: float = 0.5,
    hyper: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> ClassifierModel:
    """
    Train a classifier where every batch has round(mix_fraction * size) of its
    samples replaced by baseline attacks against the current model
    Sample choice draws from its own generator, so mix_fraction = 0 reproduces
    plain training bit for bit
    """
    cfg = preset(attack_preset) if isinstance(attack_preset, str) else attack_preset
    if not cfg.is_hard or cfg.mode != "untargeted":
        raise ConfigurationError("adversarial training needs an untargeted hard-constraint attack preset")
    if cfg.gamma != 0.0:
        cfg = cfg.with_(gamma=0.0)
    if not 0.0 <= mix_fraction <= 1.0:
        raise InvalidArgumentError(f"mix_fraction must lie in [0, 1], got {mix_fraction}")

    chooser = torch.Generator().manual_seed(seed + 1)
    replaced = {"count": 0}

    def mix_in_attacks(model, epoch, batch_index, batch, batch_labels):
        n_attack = int(round(mix_fraction * batch.shape[0]))
        if n_attack == 0:
            return batch
        chosen = torch.randperm(batch.shape[0], generator=chooser)[:n_attack]
        model.eval()
        attacked = batch_hard_attack(model, batch[chosen], batch_labels[chosen], cfg)
        mixed = batch.clone()
        mixed[chosen] = attacked
        replaced["count"] += n_attack
        return mixed

    hook: BatchHook = mix_in_attacks
    model = train_classifier(data, hyper, seed, batch_hook=hook)

    structured_logger.log_experiment_event(
        "adversarial_training",
        arch=hyper.arch,
        mix_fraction=mix_fraction,
        epsilon=cfg.epsilon,
        attacked_samples=replaced["count"],
    )
    return model
