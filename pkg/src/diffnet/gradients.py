"""
Forward passes and input gradients on single clouds
"""
import logging
from contextlib import contextmanager
from typing import Callable, Iterator

import numpy as np
import torch
import torch.nn as nn

from ..utils.errors import NumericFailureError, ValidationError
from ..utils.validators import CloudValidator
from .models import AEModel, ClassifierModel

logger = logging.getLogger(__name__)

LossFn = Callable[[torch.Tensor], torch.Tensor]


def model_dtype(model: nn.Module) -> torch.dtype:
    return next(model.parameters()).dtype


def as_batch(points: np.ndarray, model: nn.Module) -> torch.Tensor:
    """Single N x 3 cloud -> 1 x N x 3 tensor in the model's dtype"""
    cloud = np.asarray(points)
    is_valid, error_msg = CloudValidator.validate(cloud)
    if not is_valid:
        raise ValidationError(f"cloud: {error_msg}")
    return torch.as_tensor(cloud).to(model_dtype(model))[None]


@contextmanager
def finite_guard(model: nn.Module) -> Iterator[None]:
    """Raise NumericFailureError naming the first layer that outputs a non-finite value"""

    def make_hook(name: str):
        def hook(_module, _inputs, output):
            if isinstance(output, torch.Tensor) and not torch.isfinite(output).all():
                raise NumericFailureError(name or type(model).__name__)
        return hook

    handles = [
        module.register_forward_hook(make_hook(name))
        for name, module in model.named_modules()
        if not list(module.children()) or module is model
    ]
    try:
        yield
    finally:
        for handle in handles:
            handle.remove()


def locate_numeric_failure(model: nn.Module, batch: torch.Tensor) -> NumericFailureError:
    """Diagnostic pass: rerun the forward under the guard to name the failing layer"""
    try:
        with torch.no_grad(), finite_guard(model):
            model(batch)
    except NumericFailureError as failure:
        return failure
    return NumericFailureError("loss")


def forward_classifier(model: ClassifierModel, points: np.ndarray) -> np.ndarray:
    """Logits for one cloud"""
    with torch.no_grad():
        logits = model(as_batch(points, model))[0]
    return logits.double().numpy()


def forward_ae(ae: AEModel, points: np.ndarray) -> np.ndarray:
    """Reconstruction with exactly the AE's point count"""
    batch = as_batch(points, ae)
    if batch.shape[1] != ae.n_points:
        raise ValidationError(f"autoencoder expects {ae.n_points} points, got {batch.shape[1]}")
    with torch.no_grad():
        return ae(batch)[0].float().numpy()


def predict(model: ClassifierModel, clouds: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Argmax labels for a stack of equally sized clouds"""
    labels = []
    dtype = model_dtype(model)
    with torch.no_grad():
        for start in range(0, len(clouds), batch_size):
            batch = torch.from_numpy(np.asarray(clouds[start:start + batch_size], dtype=np.float32)).to(dtype)
            labels.append(model(batch).argmax(dim=1).numpy())
    return np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64)


def evaluate_accuracy(model: ClassifierModel, dataset) -> float:
    """Fraction of dataset samples classified correctly"""
    if len(dataset) == 0:
        raise ValidationError("cannot evaluate on an empty dataset")
    predictions = predict(model, dataset.clouds)
    return float(np.mean(predictions == dataset.labels))


def input_gradient(model: nn.Module, points: np.ndarray, loss: LossFn) -> np.ndarray:
    """
    dLoss/dx for one cloud via reverse-mode accumulation
    model may be a classifier or a composition such as nn.Sequential(ae, classifier);
    loss maps the model output for the single sample to a scalar
    """
    batch = as_batch(points, model).requires_grad_(True)
    with finite_guard(model):
        output = model(batch)[0]
    value = loss(output)

    if not torch.isfinite(value):
        raise NumericFailureError("loss")

    if not value.requires_grad:
        return np.zeros_like(np.asarray(points, dtype=np.float32))

    (grad,) = torch.autograd.grad(value, batch, allow_unused=True)
    if grad is None:
        return np.zeros_like(np.asarray(points, dtype=np.float32))

    if not torch.isfinite(grad).all():
        raise NumericFailureError("input")

    return grad[0].detach().numpy()
