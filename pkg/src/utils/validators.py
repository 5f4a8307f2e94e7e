"""
Validation utilities for PCAdv toolkit
"""
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgumentError, ValidationError


class CloudValidator:
    """
    Validator for point clouds and perturbations
    A cloud is an N x 3 array with N >= 1 and finite coordinates
    """

    @staticmethod
    def validate(points: np.ndarray, n_points: Optional[int] = None) -> Tuple[bool, Optional[str]]:
        """
        Validate cloud array
        Returns: (is_valid, error_message)
        """
        if points.ndim != 2 or points.shape[1] != 3:
            return False, f"expected an N x 3 array, got shape {points.shape}"

        if points.shape[0] < 1:
            return False, "point cloud is empty"

        if n_points is not None and points.shape[0] != n_points:
            return False, f"expected {n_points} points, got {points.shape[0]}"

        if not np.all(np.isfinite(points)):
            return False, "point cloud has non-finite coordinates"

        return True, None

    @classmethod
    def require(cls, points, n_points: Optional[int] = None, name: str = "cloud") -> np.ndarray:
        """Validate and return the cloud as float32, raising ValidationError"""
        array = np.asarray(points, dtype=np.float32)
        is_valid, error_msg = cls.validate(array, n_points)
        if not is_valid:
            raise ValidationError(f"{name}: {error_msg}")
        return array

    @classmethod
    def require_same_shape(cls, cloud: np.ndarray, delta: np.ndarray) -> None:
        """Perturbation must match the cloud it perturbs"""
        if cloud.shape != delta.shape:
            raise ValidationError(f"perturbation shape {delta.shape} does not match cloud shape {cloud.shape}")


class BudgetValidator:
    """Validator for norm budgets and budget grids"""

    @staticmethod
    def validate(eps: float) -> Tuple[bool, Optional[str]]:
        """Check a single budget"""
        if not math.isfinite(eps):
            return False, f"budget must be finite, got {eps}"

        if eps < 0:
            return False, f"budget must be non-negative, got {eps}"

        return True, None

    @classmethod
    def require(cls, eps: float) -> float:
        is_valid, error_msg = cls.validate(eps)
        if not is_valid:
            raise InvalidArgumentError(error_msg)
        return float(eps)

    @classmethod
    def validate_grid(cls, grid: Sequence[float]) -> Tuple[bool, Optional[str]]:
        """Grid values must be valid budgets in ascending order"""
        for eps in grid:
            is_valid, error_msg = cls.validate(eps)
            if not is_valid:
                return False, error_msg

        if any(b <= a for a, b in zip(grid, grid[1:])):
            return False, f"budget grid must be strictly ascending, got {list(grid)}"

        return True, None


class LabelValidator:
    """Validator for class labels"""

    @staticmethod
    def validate(label: int, n_classes: int) -> Tuple[bool, Optional[str]]:
        if n_classes < 2:
            return False, f"need at least 2 classes, got {n_classes}"

        if not 0 <= label < n_classes:
            return False, f"label {label} out of range [0, {n_classes})"

        return True, None

    @classmethod
    def require(cls, label: int, n_classes: int) -> int:
        is_valid, error_msg = cls.validate(int(label), n_classes)
        if not is_valid:
            raise InvalidArgumentError(error_msg)
        return int(label)


def require_neighbor_count(k: int, n_points: int) -> int:
    """kNN queries need 1 <= k < N"""
    if not 1 <= k < n_points:
        raise InvalidArgumentError(f"k must satisfy 1 <= k < N (k={k}, N={n_points})")
    return int(k)
