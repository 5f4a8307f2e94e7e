"""
Differentiable distance and projection ops used inside attack loops
Same semantics as the numpy versions in metrics / projections
"""
import torch

# Float32 shrink step applied when rounding leaves a scaled result outside the ball
_SHRINK = 1.0 - 4.0 * torch.finfo(torch.float32).eps


def squared_distances_t(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """|a| x |b| squared distances; a, b are N x 3"""
    diff = a[:, None, :] - b[None, :, :]
    return (diff * diff).sum(dim=-1)


def chamfer_t(a: torch.Tensor, b: torch.Tensor, symmetric: bool = False) -> torch.Tensor:
    """Mean over b of squared distance to the nearest point of a (plus reverse when symmetric)"""
    dist = squared_distances_t(a, b)
    directed = dist.min(dim=0).values.mean()
    if not symmetric:
        return directed
    return directed + dist.min(dim=1).values.mean()


def batch_chamfer_t(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Symmetric chamfer averaged over a batch; a, b are B x N x 3"""
    diff = a[:, :, None, :] - b[:, None, :, :]
    dist = (diff * diff).sum(dim=-1)
    forward = dist.min(dim=1).values.mean(dim=1)
    backward = dist.min(dim=2).values.mean(dim=1)
    return (forward + backward).mean()


def l2_t(delta: torch.Tensor) -> torch.Tensor:
    """Frobenius norm; gradient at zero is zero"""
    return torch.linalg.vector_norm(delta)


def matched_emd_t(points: torch.Tensor, reference: torch.Tensor, perm: torch.Tensor) -> torch.Tensor:
    """Sum of un-squared distances under a fixed matching points[i] <-> reference[perm[i]]"""
    return torch.linalg.vector_norm(points - reference[perm], dim=1).sum()


def project_linf_t(delta: torch.Tensor, eps: float) -> torch.Tensor:
    return torch.clamp(delta, -eps, eps)


def project_l2_t(delta: torch.Tensor, eps: float) -> torch.Tensor:
    norm = torch.linalg.vector_norm(delta.double())
    if norm <= eps:
        return delta
    scaled = (delta.double() * (eps / norm)).to(delta.dtype)
    # Keep the result inside the ball so a second projection is the identity
    while torch.linalg.vector_norm(scaled.double()) > eps:
        scaled = scaled * _SHRINK
    return scaled
