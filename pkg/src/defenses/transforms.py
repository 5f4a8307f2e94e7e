"""
Input-transformation defenses
"""
import logging
import math

import numpy as np

from ..diffnet.gradients import forward_ae
from ..diffnet.models import AEModel
from ..geometry import knn_mean_distances
from ..utils.errors import InvalidArgumentError
from ..utils.validators import CloudValidator, require_neighbor_count

logger = logging.getLogger(__name__)


def sor_defense(points: np.ndarray, k: int = 2, alpha: float = 1.1) -> np.ndarray:
    """
    Statistical outlier removal
    Drops points whose mean distance to their k nearest neighbors exceeds
    mu + alpha * sigma of those means; keeps order and at least one point
    """
    points = CloudValidator.require(points)
    require_neighbor_count(k, points.shape[0])
    if alpha < 0:
        raise InvalidArgumentError(f"alpha must be non-negative, got {alpha}")

    means = knn_mean_distances(points, k)
    threshold = means.mean() + alpha * means.std()
    keep = means <= threshold
    if not keep.any():
        keep[np.argmin(means)] = True

    removed = int((~keep).sum())
    if removed:
        logger.debug(f"SOR removed {removed} of {len(points)} points")
    return points[keep]


def srs_keep_count(n_points: int, drop_rate: float) -> int:
    # rounding guards ceil against products like 100 * 0.9 = 90.00000000000001
    return int(math.ceil(round(n_points * (1.0 - drop_rate), 9)))


def srs_defense(points: np.ndarray, drop_rate: float = 0.1, seed: int = 0) -> np.ndarray:
    """Keep ceil(N * (1 - drop_rate)) points chosen uniformly without replacement, original order"""
    points = CloudValidator.require(points)
    if not 0.0 <= drop_rate < 1.0:
        raise InvalidArgumentError(f"drop_rate must lie in [0, 1), got {drop_rate}")

    n_points = points.shape[0]
    n_keep = srs_keep_count(n_points, drop_rate)
    if n_keep >= n_points:
        return points.copy()

    rng = np.random.default_rng(seed)
    kept = np.sort(rng.choice(n_points, size=n_keep, replace=False))
    return points[kept]


def ae_defense(ae: AEModel, points: np.ndarray) -> np.ndarray:
    """Replace the input with its reconstruction by a separately trained autoencoder"""
    return forward_ae(ae, points)
