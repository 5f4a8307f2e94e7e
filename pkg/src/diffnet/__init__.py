"""
Differentiable point cloud networks package
"""

from .checkpoint import load_ae, load_checkpoint, load_classifier, save_checkpoint
from .gradients import evaluate_accuracy, forward_ae, forward_classifier, input_gradient, predict
from .models import ARCHITECTURES, AEModel, ClassifierModel, build_ae, build_classifier
from .optim import AdamState, adam_update
from .tensors import TensorBundle
from .training import TrainConfig, train_ae, train_classifier

__all__ = [
    'load_ae', 'load_checkpoint', 'load_classifier', 'save_checkpoint',
    'evaluate_accuracy', 'forward_ae', 'forward_classifier', 'input_gradient', 'predict',
    'ARCHITECTURES', 'AEModel', 'ClassifierModel', 'build_ae', 'build_classifier',
    'AdamState', 'adam_update', 'TensorBundle', 'TrainConfig', 'train_ae', 'train_classifier',
]
