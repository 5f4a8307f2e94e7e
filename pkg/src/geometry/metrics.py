"""
Point-set norms and distances
"""
import logging
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ..utils.errors import InvalidArgumentError, ValidationError
from ..utils.validators import CloudValidator

logger = logging.getLogger(__name__)

# Largest cloud solved by exact assignment
EMD_EXACT_CAP = 128

ChamferMode = Literal["directed", "symmetric"]


def norm_linf(delta: np.ndarray) -> float:
    """Largest absolute coordinate over all points"""
    delta = np.asarray(delta)
    if delta.size == 0:
        return 0.0
    return float(np.max(np.abs(delta)))


def norm_l2(delta: np.ndarray) -> float:
    """Frobenius norm of the perturbation"""
    delta = np.asarray(delta, dtype=np.float64)
    return float(np.sqrt(np.sum(delta * delta)))


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|a| x |b| matrix of squared distances, float64"""
    a = CloudValidator.require(a, name="first cloud")
    b = CloudValidator.require(b, name="second cloud")
    return cdist(a.astype(np.float64), b.astype(np.float64), metric="sqeuclidean")


def chamfer(a: np.ndarray, b: np.ndarray, mode: ChamferMode = "directed") -> float:
    """
    Chamfer distance with squared point distances
    directed: mean over points of b of the squared distance to the nearest point of a
    symmetric: directed(a, b) + directed(b, a)
    """
    if mode not in ("directed", "symmetric"):
        raise InvalidArgumentError(f"unknown chamfer mode: {mode}")

    dist = _squared_distances(a, b)
    directed = float(dist.min(axis=0).mean())
    if mode == "directed":
        return directed
    return directed + float(dist.min(axis=1).mean())


def hausdorff(a: np.ndarray, b: np.ndarray, mode: ChamferMode = "directed") -> float:
    """
    Hausdorff distance with squared point distances
    directed: largest squared distance from a point of b to its nearest point of a
    """
    if mode not in ("directed", "symmetric"):
        raise InvalidArgumentError(f"unknown hausdorff mode: {mode}")

    dist = _squared_distances(a, b)
    directed = float(dist.min(axis=0).max())
    if mode == "directed":
        return directed
    return max(directed, float(dist.min(axis=1).max()))


def emd_matching(a: np.ndarray, b: np.ndarray, approximate: bool = False) -> np.ndarray:
    """
    Bijection between equally sized clouds minimizing total (un-squared) distance
    Returns perm such that a[i] is matched to b[perm[i]]
    """
    a = CloudValidator.require(a, name="first cloud")
    b = CloudValidator.require(b, name="second cloud")
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"EMD needs equally sized clouds, got {a.shape[0]} and {b.shape[0]}")

    n_points = a.shape[0]
    cost = cdist(a.astype(np.float64), b.astype(np.float64), metric="euclidean")

    if approximate:
        return _greedy_matching(cost)

    if n_points > EMD_EXACT_CAP:
        raise InvalidArgumentError(
            f"exact EMD is capped at {EMD_EXACT_CAP} points (got {n_points}); "
            "pass approximate=True for the greedy approximation"
        )

    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(n_points, dtype=np.int64)
    perm[rows] = cols
    return perm


def _greedy_matching(cost: np.ndarray) -> np.ndarray:
    """Each row in order takes its nearest unmatched column, lowest index on ties"""
    n_points = cost.shape[0]
    perm = np.empty(n_points, dtype=np.int64)
    taken = np.zeros(n_points, dtype=bool)
    for i in range(n_points):
        row = np.where(taken, np.inf, cost[i])
        j = int(np.argmin(row))
        perm[i] = j
        taken[j] = True
    return perm


def emd(a: np.ndarray, b: np.ndarray, approximate: bool = False) -> float:
    """Earth mover's distance: sum of un-squared distances under the optimal bijection"""
    perm = emd_matching(a, b, approximate=approximate)
    a64 = np.asarray(a, dtype=np.float64)
    b64 = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a64 - b64[perm], axis=1).sum())
