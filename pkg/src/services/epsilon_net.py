"""
Deterministic nets of pure states.

Net points are the rays through nonzero Gaussian-integer vectors
``g = u + iv`` (``u, v`` in Z^D) with ``||g|| <= R``, ``R = ceil(1/eps)``.
Each ray is stored once: normalized, with its first nonzero amplitude real and
positive, rows in lexicographic order. The covering radius is not known in
closed form, so it is measured on a seeded probe set.
"""
import math
from typing import Tuple

import numpy as np

from ..config import settings
from ..errors import DomainError, EmptyNet, NetTooLarge
from ..utils.logger import logger

ROUND_DECIMALS = 9
PHASE_FLOOR = 1e-12
PROBE_BATCH = 32


def lattice_radius(epsilon: float) -> int:
    if not 0.0 < epsilon <= 2.0:
        raise DomainError(f"epsilon must lie in (0, 2], got {epsilon}")
    return math.ceil(1.0 / epsilon)


def estimated_size(dim: int, radius: int) -> float:
    """Ball volume in R^{2D} over the four unit phases; a rough upper estimate of the net size."""
    log_size = dim * math.log(math.pi) + 2 * dim * math.log(radius) - math.lgamma(dim + 1) - math.log(4)
    return math.exp(min(log_size, 700.0))


def _integer_ball(dim: int, radius: int) -> np.ndarray:
    axis = np.arange(-radius, radius + 1)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return grid[np.sum(grid ** 2, axis=1) <= radius ** 2]


def canonical_rays(vectors: np.ndarray) -> np.ndarray:
    """Normalize rows and rotate each so its first nonzero entry is real positive."""
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    first = np.argmax(np.abs(vectors) > PHASE_FLOOR, axis=1)
    lead = vectors[np.arange(len(vectors)), first]
    return vectors * (np.abs(lead) / lead)[:, None]


def lattice_net(dim: int, epsilon: float) -> np.ndarray:
    """All canonical rays of Gaussian-integer vectors in the radius-``ceil(1/eps)`` ball."""
    if dim < 1:
        raise DomainError(f"Dimension must be positive, got {dim}")
    radius = lattice_radius(epsilon)
    estimate = estimated_size(dim, radius)
    if estimate > settings.NET_MAX_POINTS:
        raise NetTooLarge(
            f"Net for dimension {dim} at eps={epsilon} has about {estimate:.3g} points "
            f"(limit {settings.NET_MAX_POINTS})"
        )
    ball = _integer_ball(dim, radius)
    norms = np.sum(ball ** 2, axis=1)
    real_idx, imag_idx = np.nonzero(norms[:, None] + norms[None, :] <= radius ** 2)
    vectors = ball[real_idx] + 1j * ball[imag_idx]
    vectors = vectors[np.any(vectors != 0, axis=1)]
    if len(vectors) == 0:
        raise EmptyNet(f"No lattice points for dimension {dim} at eps={epsilon}")

    rays = canonical_rays(vectors)
    stacked = np.round(np.hstack([rays.real, rays.imag]), ROUND_DECIMALS) + 0.0
    unique = np.unique(stacked, axis=0)
    points = unique[:, :dim] + 1j * unique[:, dim:]
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    if len(points) > settings.NET_MAX_POINTS:
        raise NetTooLarge(f"Net has {len(points)} points (limit {settings.NET_MAX_POINTS})")
    logger.debug(f"Lattice net dim={dim} eps={epsilon}: radius {radius}, {len(points)} points")
    return points


def nearest_point(points: np.ndarray, target: np.ndarray) -> Tuple[int, float]:
    """Index of the point with the largest ``|<point|target>|`` (lowest index on ties) and that overlap."""
    overlaps = np.abs(points.conj() @ target)
    index = int(np.argmax(overlaps))
    return index, float(min(1.0, overlaps[index]))


def ray_distance(overlap: float) -> float:
    """``min_alpha || t - e^{i alpha} p ||`` for unit vectors with ``|<t|p>| = overlap``."""
    return math.sqrt(max(0.0, 2.0 - 2.0 * overlap))


def measured_covering_radius(points: np.ndarray, probes: int = 512, seed: int = 0) -> float:
    """Largest distance from a Haar-random probe to its nearest net point."""
    rng = np.random.default_rng(seed)
    dim = points.shape[1]
    samples = rng.standard_normal((probes, dim)) + 1j * rng.standard_normal((probes, dim))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    worst = 0.0
    for start in range(0, probes, PROBE_BATCH):
        batch = samples[start:start + PROBE_BATCH]
        best = np.max(np.abs(points.conj() @ batch.T), axis=0)
        worst = max(worst, ray_distance(float(np.min(best))))
    return worst
