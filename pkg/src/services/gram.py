"""
Gram-matrix evaluation of exchange resources.

Every state the exchange procedure produces is a uniform superposition of
threshold products ``T(c) = phi^{(x)c} psi~^{(x)(L-c)}`` over ``L`` slots, where
``<phi|psi~> = a`` is real and non-negative. Two threshold products overlap in
``a ** |c - c'|``, so overlaps of superpositions over integer ranges reduce to a
sum over differences weighted by how many pairs realise each difference. This
runs in O(N) and never materializes a state vector.
"""
import math
from typing import Tuple

import numpy as np
import scipy.linalg

from ..errors import DomainError


def _difference_counts(first: range, second: range) -> Tuple[np.ndarray, np.ndarray]:
    deltas = np.arange(first.start - (second.stop - 1), first.stop - second.start, dtype=np.int64)
    upper = np.minimum(first.stop - 1, second.stop - 1 + deltas)
    lower = np.maximum(first.start, second.start + deltas)
    return deltas, np.clip(upper - lower + 1, 0, None)


def threshold_sum(a: float, first: range, second: range) -> float:
    """Sum of ``a ** |c - c'|`` over ``c`` in ``first`` and ``c'`` in ``second``."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"Overlap magnitude must lie in [0, 1), got {a}")
    deltas, counts = _difference_counts(first, second)
    weights = np.power(a, np.abs(deltas).astype(float))
    return math.fsum(counts.astype(float) * weights)


def resource_range(N: int) -> range:
    return range(1, N + 1)


def residual_range(N: int, direction: str) -> range:
    if direction == "forward":
        return range(2, N + 2)
    if direction == "backward":
        return range(0, N)
    raise ValueError(f"Unknown shift direction: {direction}")


def resource_norm_sq(N: int, a: float) -> float:
    """Squared norm of the unnormalized resource superposition (the N1 of the resource)."""
    return threshold_sum(a, resource_range(N), resource_range(N))


def residual_overlap(N: int, a: float, direction: str = "forward") -> float:
    """<E'_N|E_N> for the residual left behind by a shift in ``direction``."""
    cross = threshold_sum(a, residual_range(N, direction), resource_range(N))
    return cross / resource_norm_sq(N, a)


def gram_matrix(N: int, a: float) -> np.ndarray:
    """N x N Gram matrix of the resource terms ``phi^k psi~^(N-k+1)``."""
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    return scipy.linalg.toeplitz(np.power(float(a), np.arange(N, dtype=float)))
