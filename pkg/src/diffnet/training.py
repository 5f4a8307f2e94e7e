"""
Training loops for classifiers and the auto-encoder
"""
import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np
import torch
import torch.nn.functional as F
from tqdm import tqdm

from ..config.logging_config import progress_disabled, structured_logger
from ..geometry.torch_ops import batch_chamfer_t
from ..utils.errors import NumericFailureError, ValidationError
from .models import AEModel, ClassifierModel, PointCloudModel, build_ae, build_classifier
from .optim import AdamState, adam_update

logger = logging.getLogger(__name__)

# (model, epoch, batch index, clouds, labels) -> clouds used for the step
BatchHook = Callable[[ClassifierModel, int, int, torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters"""
    epochs: int = 60
    batch_size: int = 16
    lr: float = 1e-3
    arch: str = "pointnet_tiny"
    knn_k: int = 8
    latent_dim: int = 64

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ValidationError(f"invalid training config: {self}")

    @classmethod
    def for_ae(cls, **overrides) -> "TrainConfig":
        return replace(cls(epochs=120), **overrides)


def _fit(
    model: PointCloudModel,
    clouds: torch.Tensor,
    targets: torch.Tensor,
    hyper: TrainConfig,
    generator: torch.Generator,
    loss_fn: Callable[[PointCloudModel, torch.Tensor, torch.Tensor], torch.Tensor],
    desc: str,
    batch_hook: Optional[BatchHook] = None,
) -> List[float]:
    """Minibatch Adam; returns the epoch-average loss history"""
    params = dict(model.named_parameters())
    state = AdamState.zeros_like({name: p.detach() for name, p in params.items()})
    n_samples = clouds.shape[0]
    history: List[float] = []

    epochs = tqdm(range(hyper.epochs), desc=desc, leave=False,
                  disable=progress_disabled())
    for epoch in epochs:
        order = torch.randperm(n_samples, generator=generator)
        total = 0.0
        for batch_index, start in enumerate(range(0, n_samples, hyper.batch_size)):
            idx = order[start:start + hyper.batch_size]
            batch, batch_targets = clouds[idx], targets[idx]
            if batch_hook is not None:
                batch = batch_hook(model, epoch, batch_index, batch, batch_targets)

            model.train()
            loss = loss_fn(model, batch, batch_targets)
            if not torch.isfinite(loss):
                raise NumericFailureError(f"{desc} loss")

            grads = torch.autograd.grad(loss, list(params.values()))
            state, updated = adam_update(
                state,
                {name: p.detach() for name, p in params.items()},
                dict(zip(params, grads)),
                hyper.lr,
            )
            with torch.no_grad():
                for name, param in params.items():
                    param.copy_(updated[name])
            total += float(loss) * len(idx)

        history.append(total / n_samples)
        epochs.set_postfix(loss=f"{history[-1]:.4f}")
        logger.debug(f"{desc} epoch {epoch + 1}/{hyper.epochs} loss={history[-1]:.5f}")

    model.eval()
    return history


def _classification_loss(model, batch, labels):
    return F.cross_entropy(model(batch), labels)


def _reconstruction_loss(model, batch, _targets):
    return batch_chamfer_t(model(batch), batch)


def _tensors(data):
    if len(data) == 0:
        raise ValidationError("cannot train on an empty dataset")
    clouds = torch.from_numpy(np.ascontiguousarray(data.clouds, dtype=np.float32))
    labels = torch.from_numpy(np.asarray(data.labels, dtype=np.int64))
    return clouds, labels


def train_classifier(data, hyper: TrainConfig, seed: int, batch_hook: Optional[BatchHook] = None) -> ClassifierModel:
    """
    Train a classifier with softmax cross-entropy
    Deterministic given seed: the seed drives both initialization and batch order
    """
    clouds, labels = _tensors(data)
    if int(labels.max()) >= data.n_classes:
        raise ValidationError(f"label {int(labels.max())} out of range for {data.n_classes} classes")

    generator = torch.Generator().manual_seed(seed)
    model = build_classifier(hyper.arch, data.n_classes, seed=seed, knn_k=hyper.knn_k)

    started = time.perf_counter()
    history = _fit(model, clouds, labels, hyper, generator, _classification_loss,
                   desc=f"train {hyper.arch}", batch_hook=batch_hook)
    model.training_history = history

    structured_logger.log_performance(
        "train_classifier",
        (time.perf_counter() - started) * 1000,
        arch=hyper.arch,
        epochs=hyper.epochs,
        final_loss=round(history[-1], 5),
        threads=torch.get_num_threads(),
    )
    return model


def train_ae(data, hyper: TrainConfig, seed: int) -> AEModel:
    """Train the auto-encoder with the symmetric Chamfer reconstruction loss"""
    clouds, labels = _tensors(data)
    generator = torch.Generator().manual_seed(seed)
    model = build_ae(clouds.shape[1], hyper.latent_dim, seed=seed)

    started = time.perf_counter()
    history = _fit(model, clouds, labels, hyper, generator, _reconstruction_loss, desc="train autoencoder")
    model.training_history = history

    structured_logger.log_performance(
        "train_ae",
        (time.perf_counter() - started) * 1000,
        latent_dim=hyper.latent_dim,
        epochs=hyper.epochs,
        final_loss=round(history[-1], 6),
    )
    return model
