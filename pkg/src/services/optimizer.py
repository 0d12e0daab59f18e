"""
See-saw search over strategies of fixed shared dimension.

Each step holds two of (Alice, Bob, shared state) fixed. For a player the
objective ``1/4 ||W||^2`` with ``W = sum_r A_r (I_r x psi) B_r^T`` is
maximized through its linearization at the current ``W``: aligning the
player's isometry with ``Z = W/||W||`` is an orthogonal-Procrustes problem
solved by one SVD, and it can only increase ``||W||``. The shared-state step
is an exact top-eigenvector problem. Values found are lower bounds on the
game value, never certified optima.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..config import settings
from ..errors import BoundViolation, DomainError, TooLarge
from ..models.experiment import SeesawConfig
from ..utils.logger import logger
from .game import (
    BRANCH_INPUTS,
    CAP_TOL,
    QUTRIT,
    Strategy,
    alice_isometry,
    bob_isometry,
    fannes_upper_bound,
    shared_layout,
    unentangled_upper_bound,
    win_probability,
)
from .statevec import make_state, random_state

ZERO_NORM = 1e-15
MONOTONE_TOL = 1e-12
STEPS = ("alice", "bob", "shared")


@dataclass
class SeesawReport:
    d: int
    best_value: float
    best_strategy: Strategy
    best_restart: int
    upper_bound: float
    seed: int
    per_restart_trajectories: List[List[float]] = field(default_factory=list)

    @property
    def iterations_per_restart(self) -> List[int]:
        return [len(trajectory) - 1 for trajectory in self.per_restart_trajectories]


def _isometry_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    gaussian = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(gaussian)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_strategy(d: int, y_dim: Optional[int] = None, seed=0) -> Strategy:
    """Gaussian shared state and QR-orthonormalized Gaussian isometries."""
    y_dim = y_dim or QUTRIT * d
    if 2 * y_dim < QUTRIT * d:
        raise DomainError(f"y_dim={y_dim} too small for an isometry from dimension {QUTRIT * d}")
    rng = np.random.default_rng(seed)
    shared = random_state(shared_layout(d), rng)
    alice = _isometry_columns(rng, 2 * y_dim, QUTRIT * d)
    bob = _isometry_columns(rng, 2 * y_dim, QUTRIT * d)
    return Strategy(d, shared, alice_isometry(alice, d), bob_isometry(bob, d))


def _environment(strategy: Strategy) -> np.ndarray:
    alice, bob = strategy.alice_branches, strategy.bob_branches
    return sum(alice[r] @ block @ bob[r].T for r, block in enumerate(strategy.branch_inputs()))


def _direction(strategy: Strategy) -> np.ndarray:
    w = _environment(strategy)
    norm = np.linalg.norm(w)
    if norm < ZERO_NORM:
        return np.ones_like(w) / np.sqrt(w.size)
    return w / norm


def _procrustes(k: np.ndarray) -> np.ndarray:
    """Isometry V maximizing Re Tr(V K)."""
    u, _, vh = np.linalg.svd(k, full_matrices=False)
    return vh.conj().T @ u.conj().T


def _improve_alice(strategy: Strategy) -> Strategy:
    z = _direction(strategy)
    bob = strategy.bob_branches
    k = np.hstack([block @ bob[r].T @ z.conj().T for r, block in enumerate(strategy.branch_inputs())])
    return Strategy(strategy.d, strategy.shared_state, alice_isometry(_procrustes(k), strategy.d), strategy.bob)


def _improve_bob(strategy: Strategy) -> Strategy:
    z = _direction(strategy)
    alice = strategy.alice_branches
    k = np.hstack([(alice[r] @ block).T @ z.conj() for r, block in enumerate(strategy.branch_inputs())])
    return Strategy(strategy.d, strategy.shared_state, strategy.alice, bob_isometry(_procrustes(k), strategy.d))


def _improve_shared(strategy: Strategy) -> Strategy:
    d = strategy.d
    alice = strategy.alice_branches.reshape(2, -1, QUTRIT, d)
    bob = strategy.bob_branches.reshape(2, -1, QUTRIT, d)
    linear = sum(
        np.einsum("ysa,st,ztb->yzab", alice[r], BRANCH_INPUTS[r], bob[r]) for r in range(2)
    ).reshape(-1, d * d)
    _, vectors = np.linalg.eigh(linear.conj().T @ linear)
    shared = make_state(shared_layout(d), vectors[:, -1])
    return Strategy(d, shared, strategy.alice, strategy.bob)


def improve_player(strategy: Strategy, which: str) -> Strategy:
    """One see-saw step on ``which``; returns the input when the step would not help."""
    steps = {"alice": _improve_alice, "bob": _improve_bob, "shared": _improve_shared}
    if which not in steps:
        raise DomainError(f"Unknown see-saw step: {which}")
    candidate = steps[which](strategy)
    if win_probability(candidate) < win_probability(strategy):
        return strategy
    return candidate


def _check_budget(d: int, y_dim: int):
    peak = max(y_dim * y_dim * d * d, 2 * y_dim * QUTRIT * d)
    if peak > settings.DENSE_BUDGET:
        raise TooLarge(f"See-saw at d={d}, y_dim={y_dim} needs {peak} amplitudes")


def _climb(start: Strategy, config: SeesawConfig, restart: int):
    strategy = start
    value = win_probability(strategy)
    trajectory = [value]
    for _ in range(config.max_iters):
        for which in STEPS:
            strategy = improve_player(strategy, which)
        new_value = win_probability(strategy)
        if new_value < value - MONOTONE_TOL:
            raise BoundViolation(f"Restart {restart}: see-saw value fell from {value!r} to {new_value!r}")
        trajectory.append(new_value)
        if new_value - value < config.tol:
            break
        value = new_value
    else:
        logger.warning(f"Restart {restart} did not converge in {config.max_iters} iterations")
    logger.debug(f"Restart {restart}: {trajectory[-1]!r} after {len(trajectory) - 1} iterations")
    return strategy, trajectory


def seesaw(config: SeesawConfig, initial: Optional[Strategy] = None) -> SeesawReport:
    """Best strategy over ``config.restarts`` see-saw climbs.

    Restart ``i`` starts from a strategy seeded by the i-th child of
    ``SeedSequence(config.seed)``; ``initial`` replaces the start of restart 0.
    """
    y_dim = config.residual_dim
    _check_budget(config.d, y_dim)
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)

    def run(index: int):
        if index == 0 and initial is not None:
            start = initial
        else:
            start = random_strategy(config.d, y_dim, seeds[index])
        return _climb(start, config, index)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(run, range(config.restarts)))

    finals = [trajectory[-1] for _, trajectory in results]
    best = max(range(len(finals)), key=lambda i: (finals[i], -i))
    upper = fannes_upper_bound(config.d)
    if finals[best] > upper + CAP_TOL:
        raise BoundViolation(f"See-saw value {finals[best]!r} exceeds the d={config.d} bound {upper!r}")
    if config.d == 1 and finals[best] > unentangled_upper_bound() + CAP_TOL:
        raise BoundViolation(f"See-saw value {finals[best]!r} exceeds the product-state cap")
    logger.info(f"See-saw d={config.d}: best-found {finals[best]!r} (restart {best}), bound {upper!r}")
    return SeesawReport(
        d=config.d,
        best_value=finals[best],
        best_strategy=results[best][0],
        best_restart=best,
        upper_bound=upper,
        seed=config.seed,
        per_restart_trajectories=[trajectory for _, trajectory in results],
    )
