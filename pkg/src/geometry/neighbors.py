"""
Brute-force k-nearest-neighbor queries
"""
import numpy as np
from scipy.spatial.distance import cdist

from ..utils.validators import CloudValidator, require_neighbor_count


def knn_indices(points: np.ndarray, k: int) -> np.ndarray:
    """
    For each point, indices of its k nearest other points
    Ordered by distance, ties broken by lowest index; shape N x k
    """
    points = CloudValidator.require(points)
    require_neighbor_count(k, points.shape[0])

    dist = cdist(points.astype(np.float64), points.astype(np.float64), metric="sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def knn_mean_distances(points: np.ndarray, k: int) -> np.ndarray:
    """Mean Euclidean distance of every point to its k nearest neighbors"""
    points = CloudValidator.require(points)
    neighbors = knn_indices(points, k)
    p64 = points.astype(np.float64)
    gaps = np.linalg.norm(p64[neighbors] - p64[:, None, :], axis=2)
    return gaps.mean(axis=1)
