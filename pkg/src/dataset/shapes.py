"""
Parametric shape sampling for the synthetic dataset
"""
import math
from typing import Callable, Dict, Tuple

import numpy as np

from ..utils.errors import InvalidArgumentError, ValidationError
from ..utils.validators import CloudValidator

SHAPE_NAMES: Tuple[str, ...] = (
    "sphere",
    "cube",
    "cylinder",
    "cone",
    "torus",
    "plane",
    "pyramid",
    "helix",
)

# Shape dimensions before normalization
CYLINDER_RADIUS, CYLINDER_HEIGHT = 0.5, 2.0
CONE_RADIUS, CONE_HEIGHT = 1.0, 1.5
TORUS_TUBE = 0.5
TORUS_RING = 2.0 * TORUS_TUBE
PYRAMID_HEIGHT = 1.5
HELIX_RADIUS, HELIX_PITCH, HELIX_TURNS, HELIX_TUBE = 1.0, 0.15, 2.0, 0.15


def _split_by_area(rng: np.random.Generator, n_points: int, areas) -> np.ndarray:
    """Number of points drawn from each surface part, proportional to its area"""
    weights = np.asarray(areas, dtype=np.float64)
    return rng.multinomial(n_points, weights / weights.sum())


def _disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def _triangle(rng: np.random.Generator, n: int, a, b, c) -> np.ndarray:
    u, v = rng.random(n), rng.random(n)
    root = np.sqrt(u)[:, None]
    a, b, c = (np.asarray(p, dtype=np.float64) for p in (a, b, c))
    return (1.0 - root) * a + root * (1.0 - v[:, None]) * b + root * v[:, None] * c


def _sphere(rng: np.random.Generator, n_points: int) -> np.ndarray:
    # Antipodal pairs keep the sample centroid on the sphere center; an odd
    # count adds an equilateral triangle on a great circle (sums to zero)
    if n_points == 1:
        direction = rng.normal(size=(1, 3))
        return direction / np.linalg.norm(direction)

    n_triangle = 3 if n_points % 2 else 0
    directions = rng.normal(size=((n_points - n_triangle) // 2, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    parts = [directions, -directions]

    if n_triangle:
        frame, _ = np.linalg.qr(rng.normal(size=(3, 2)))
        u, v = frame[:, 0], frame[:, 1]
        half_root3 = math.sqrt(3.0) / 2.0
        parts.append(np.stack([u, -0.5 * u + half_root3 * v, -0.5 * u - half_root3 * v]))
    return np.concatenate(parts)


def _cube(rng: np.random.Generator, n_points: int) -> np.ndarray:
    faces = rng.integers(0, 6, n_points)
    points = rng.uniform(-1.0, 1.0, (n_points, 3))
    axis = faces // 2
    points[np.arange(n_points), axis] = np.where(faces % 2 == 0, -1.0, 1.0)
    return points


def _cylinder(rng: np.random.Generator, n_points: int) -> np.ndarray:
    r, h = CYLINDER_RADIUS, CYLINDER_HEIGHT
    n_side, n_top, n_bottom = _split_by_area(rng, n_points, [2 * math.pi * r * h, math.pi * r * r, math.pi * r * r])

    theta = rng.uniform(0.0, 2.0 * math.pi, n_side)
    side = np.stack([r * np.cos(theta), r * np.sin(theta), rng.uniform(-h / 2, h / 2, n_side)], axis=1)
    top = np.column_stack([_disk(rng, n_top, r), np.full(n_top, h / 2)])
    bottom = np.column_stack([_disk(rng, n_bottom, r), np.full(n_bottom, -h / 2)])
    return np.concatenate([side, top, bottom])


def _cone(rng: np.random.Generator, n_points: int) -> np.ndarray:
    r, h = CONE_RADIUS, CONE_HEIGHT
    n_side, n_base = _split_by_area(rng, n_points, [math.pi * r * math.hypot(r, h), math.pi * r * r])

    # Distance from the apex along the slant grows as sqrt(u) for uniform area
    s = np.sqrt(rng.random(n_side))
    theta = rng.uniform(0.0, 2.0 * math.pi, n_side)
    side = np.stack([s * r * np.cos(theta), s * r * np.sin(theta), h * (1.0 - s)], axis=1)
    base = np.column_stack([_disk(rng, n_base, r), np.zeros(n_base)])
    return np.concatenate([side, base])


def _torus(rng: np.random.Generator, n_points: int) -> np.ndarray:
    big, small = TORUS_RING, TORUS_TUBE
    # Rejection on the tube angle: surface density is proportional to R + r cos(phi)
    accepted = np.empty(0)
    while accepted.size < n_points:
        phi = rng.uniform(0.0, 2.0 * math.pi, 2 * n_points)
        keep = rng.random(2 * n_points) < (big + small * np.cos(phi)) / (big + small)
        accepted = np.concatenate([accepted, phi[keep]])
    phi = accepted[:n_points]
    theta = rng.uniform(0.0, 2.0 * math.pi, n_points)
    ring = big + small * np.cos(phi)
    return np.stack([ring * np.cos(theta), ring * np.sin(theta), small * np.sin(phi)], axis=1)


def _plane(rng: np.random.Generator, n_points: int) -> np.ndarray:
    return np.column_stack([_disk(rng, n_points, 1.0), np.zeros(n_points)])


def _pyramid(rng: np.random.Generator, n_points: int) -> np.ndarray:
    corners = [(-1.0, -1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 0.0)]
    apex = (0.0, 0.0, PYRAMID_HEIGHT)
    triangles = [(corners[i], corners[(i + 1) % 4], apex) for i in range(4)]
    triangles += [(corners[0], corners[1], corners[2]), (corners[0], corners[2], corners[3])]

    areas = [
        0.5 * np.linalg.norm(np.cross(np.subtract(b, a), np.subtract(c, a)))
        for a, b, c in triangles
    ]
    counts = _split_by_area(rng, n_points, areas)
    return np.concatenate([_triangle(rng, n, *tri) for n, tri in zip(counts, triangles)])


def _helix(rng: np.random.Generator, n_points: int) -> np.ndarray:
    big, pitch, tube = HELIX_RADIUS, HELIX_PITCH, HELIX_TUBE
    # Constant-speed centerline, so uniform t is uniform in arc length
    t = rng.uniform(0.0, 2.0 * math.pi * HELIX_TURNS, n_points)
    phi = rng.uniform(0.0, 2.0 * math.pi, n_points)

    center = np.stack([big * np.cos(t), big * np.sin(t), pitch * t], axis=1)
    tangent = np.stack([-big * np.sin(t), big * np.cos(t), np.full_like(t, pitch)], axis=1)
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    normal = np.stack([-np.cos(t), -np.sin(t), np.zeros_like(t)], axis=1)
    binormal = np.cross(tangent, normal)
    return center + tube * (np.cos(phi)[:, None] * normal + np.sin(phi)[:, None] * binormal)


_SAMPLERS: Dict[int, Callable[[np.random.Generator, int], np.ndarray]] = {
    0: _sphere,
    1: _cube,
    2: _cylinder,
    3: _cone,
    4: _torus,
    5: _plane,
    6: _pyramid,
    7: _helix,
}


def sample_surface(class_id: int, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """
    Raw surface samples of a class: no rotation, jitter or normalization
    Returns float64 N x 3 in the shape's own frame
    """
    sampler = _SAMPLERS.get(int(class_id))
    if sampler is None:
        raise InvalidArgumentError(f"unknown shape class {class_id}, expected 0..{len(SHAPE_NAMES) - 1}")
    if n_points < 1:
        raise InvalidArgumentError(f"n_points must be >= 1, got {n_points}")
    return sampler(rng, n_points)


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def normalize(points: np.ndarray) -> np.ndarray:
    """Centroid to the origin, farthest point at distance 1"""
    points = np.asarray(points, dtype=np.float64)
    is_valid, error_msg = CloudValidator.validate(points)
    if not is_valid:
        raise ValidationError(f"cloud: {error_msg}")

    centered = points - points.mean(axis=0)
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale <= np.finfo(np.float32).tiny:
        raise ValidationError("cannot normalize a degenerate cloud (all points identical)")
    return (centered / scale).astype(np.float32)


def generate_shape(class_id: int, n_points: int, seed: int, noise_sigma: float = 0.02) -> np.ndarray:
    """
    One normalized sample of a shape class
    Surface sampling, random rotation about z, Gaussian jitter, normalize;
    fully determined by (class_id, n_points, seed, noise_sigma)
    """
    if noise_sigma < 0:
        raise InvalidArgumentError(f"noise_sigma must be non-negative, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    points = sample_surface(class_id, n_points, rng)
    points = points @ rotation_z(rng.uniform(0.0, 2.0 * math.pi)).T
    if noise_sigma > 0:
        points = points + rng.normal(scale=noise_sigma, size=points.shape)
    return normalize(points)
