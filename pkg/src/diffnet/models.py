"""
Point cloud classifiers and auto-encoder
"""
import math
from typing import Any, Dict, Sequence

import torch
import torch.nn as nn

from ..utils.errors import ConfigurationError, ValidationError
from .tensors import TensorBundle

ARCHITECTURES = ("pointnet_tiny", "pointnet_wide", "edgeconv_lite")
AE_ARCH = "autoencoder"


class SharedMLP(nn.Module):
    """Per-point linear layers with ReLU; applied to the last dimension"""

    def __init__(self, widths: Sequence[int], final_relu: bool = True):
        super().__init__()
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            layers.append(nn.Linear(fan_in, fan_out))
            if final_relu or i < len(widths) - 2:
                layers.append(nn.ReLU())
        self.layers = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class PointCloudModel(nn.Module):
    """Common descriptor and parameter-bundle plumbing"""

    kind: str = "model"
    arch: str = ""

    def descriptor(self) -> Dict[str, Any]:
        raise NotImplementedError

    def bundle(self) -> TensorBundle:
        return TensorBundle.from_module(self)

    def load_bundle(self, bundle: TensorBundle) -> None:
        expected = TensorBundle.from_module(self).shapes()
        if bundle.shapes() != expected:
            raise ValidationError("parameter shapes do not match the architecture descriptor")
        self.load_state_dict({name: torch.from_numpy(bundle[name].copy()) for name in bundle})

    def __repr__(self) -> str:
        fields = ", ".join(f"{k}={v}" for k, v in self.descriptor().items())
        return f"<{type(self).__name__}({fields})>"


class ClassifierModel(PointCloudModel):
    """K-class classifier: per-point features, max-pool over points, head MLP"""

    kind = "classifier"

    def __init__(self, arch: str, k_classes: int, knn_k: int = 0):
        super().__init__()
        if k_classes < 2:
            raise ConfigurationError(f"k_classes must be >= 2, got {k_classes}")
        self.arch = arch
        self.k_classes = k_classes
        self.knn_k = knn_k

    def descriptor(self) -> Dict[str, Any]:
        return {"arch": self.arch, "k_classes": self.k_classes, "knn_k": self.knn_k}

    def point_features(self, points: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        features = self.point_features(points)
        pooled = features.max(dim=1).values
        return self.head(pooled)


class PointNetClassifier(ClassifierModel):
    """Shared MLP 3 -> w -> 2w -> 4w, max-pool, head 4w -> 2w -> K"""

    def __init__(self, k_classes: int, width: int = 32, arch: str = "pointnet_tiny"):
        super().__init__(arch, k_classes)
        self.point_mlp = SharedMLP((3, width, 2 * width, 4 * width))
        self.head = nn.Sequential(
            nn.Linear(4 * width, 2 * width),
            nn.ReLU(),
            nn.Linear(2 * width, k_classes),
        )

    def point_features(self, points: torch.Tensor) -> torch.Tensor:
        return self.point_mlp(points)


def knn_graph(points: torch.Tensor, k: int) -> torch.Tensor:
    """B x N x k neighbor indices on current coordinates, excluding self, lowest index on ties"""
    with torch.no_grad():
        diff = points[:, :, None, :] - points[:, None, :, :]
        dist = (diff * diff).sum(dim=-1)
        dist.diagonal(dim1=1, dim2=2).fill_(float("inf"))
        order = torch.sort(dist, dim=-1, stable=True).indices
    return order[..., :k]


class EdgeConvClassifier(ClassifierModel):
    """
    One edge layer on [x_i ; x_j - x_i] (6 -> 64) max-pooled over k neighbors,
    then per-point 64 -> 128, max-pool over points, head 128 -> 64 -> K
    The kNN graph is rebuilt from the input on every forward pass and is
    constant for autograd
    """

    def __init__(self, k_classes: int, knn_k: int = 8):
        super().__init__("edgeconv_lite", k_classes, knn_k)
        self.edge_mlp = SharedMLP((6, 64))
        self.point_mlp = SharedMLP((64, 128))
        self.head = nn.Sequential(
            nn.Linear(128, 64),
            nn.ReLU(),
            nn.Linear(64, k_classes),
        )

    def point_features(self, points: torch.Tensor) -> torch.Tensor:
        batch, n_points, _ = points.shape
        if n_points <= self.knn_k:
            raise ValidationError(f"edgeconv_lite needs more than {self.knn_k} points, got {n_points}")

        neighbors = knn_graph(points, self.knn_k)
        batch_index = torch.arange(batch, device=points.device)[:, None, None]
        neighbor_points = points[batch_index, neighbors]
        centers = points[:, :, None, :].expand_as(neighbor_points)
        edges = torch.cat([centers, neighbor_points - centers], dim=-1)
        edge_features = self.edge_mlp(edges).max(dim=2).values
        return self.point_mlp(edge_features)


class AEModel(PointCloudModel):
    """
    Encoder 3 -> 64 -> 128 -> q per point with max-pool,
    dense decoder q -> 128 -> N*3 reshaped to N x 3
    """

    kind = "autoencoder"
    arch = AE_ARCH

    def __init__(self, n_points: int, latent_dim: int = 64):
        super().__init__()
        if latent_dim < 1:
            raise ConfigurationError(f"latent_dim must be >= 1, got {latent_dim}")
        if n_points < 1:
            raise ConfigurationError(f"n_points must be >= 1, got {n_points}")
        self.n_points = n_points
        self.latent_dim = latent_dim
        self.encoder = SharedMLP((3, 64, 128, latent_dim), final_relu=False)
        self.decoder = nn.Sequential(
            nn.Linear(latent_dim, 128),
            nn.ReLU(),
            nn.Linear(128, n_points * 3),
        )

    def descriptor(self) -> Dict[str, Any]:
        return {"arch": self.arch, "n_points": self.n_points, "latent_dim": self.latent_dim}

    def encode(self, points: torch.Tensor) -> torch.Tensor:
        return self.encoder(points).max(dim=1).values

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        if points.shape[1] != self.n_points:
            raise ValidationError(f"autoencoder expects {self.n_points} points, got {points.shape[1]}")
        latent = self.encode(points)
        return self.decoder(latent).view(points.shape[0], self.n_points, 3)


def init_parameters(module: nn.Module, generator: torch.Generator) -> None:
    """Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero"""
    with torch.no_grad():
        for layer in module.modules():
            if isinstance(layer, nn.Linear):
                bound = math.sqrt(6.0 / (layer.in_features + layer.out_features))
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.zero_()


def build_classifier(arch: str, k_classes: int, seed: int = 0, knn_k: int = 8) -> ClassifierModel:
    """Seeded classifier of the given architecture"""
    if arch == "pointnet_tiny":
        model: ClassifierModel = PointNetClassifier(k_classes, width=32, arch=arch)
    elif arch == "pointnet_wide":
        model = PointNetClassifier(k_classes, width=64, arch=arch)
    elif arch == "edgeconv_lite":
        model = EdgeConvClassifier(k_classes, knn_k=knn_k)
    else:
        raise ConfigurationError(f"Unknown architecture '{arch}', expected one of {ARCHITECTURES}")

    init_parameters(model, torch.Generator().manual_seed(seed))
    return model.eval()


def build_ae(n_points: int, latent_dim: int = 64, seed: int = 0) -> AEModel:
    """Seeded auto-encoder"""
    model = AEModel(n_points, latent_dim)
    init_parameters(model, torch.Generator().manual_seed(seed))
    return model.eval()
