"""
See-saw optimizer tests: random strategies, monotone steps, restarts and caps.
"""
import math

import numpy as np
import pytest

from src.models.experiment import SeesawConfig

PRODUCT_CAP = 0.5 + 1 / (2 * math.sqrt(2))


def test_random_strategy_is_valid_and_seeded():
    from src.services.optimizer import random_strategy
    first = random_strategy(2, seed=11)
    second = random_strategy(2, seed=11)
    assert first.d == 2
    assert np.allclose(first.alice.matrix, second.alice.matrix)
    assert np.allclose(first.shared_state.amplitudes, second.shared_state.amplitudes)


def test_random_strategy_rejects_small_residual():
    from src.services.optimizer import random_strategy
    from src.errors import DomainError
    with pytest.raises(DomainError):
        random_strategy(2, y_dim=2)


@pytest.mark.parametrize("which", ["alice", "bob", "shared"])
def test_improve_player_never_decreases(which):
    from src.services.game import win_probability
    from src.services.optimizer import improve_player, random_strategy
    for seed in range(4):
        strategy = random_strategy(1, seed=seed)
        improved = improve_player(strategy, which)
        assert win_probability(improved) >= win_probability(strategy) - 1e-12


def test_improve_player_unknown_step():
    from src.services.optimizer import improve_player, random_strategy
    from src.errors import DomainError
    with pytest.raises(DomainError):
        improve_player(random_strategy(1), "referee")


def test_seesaw_d1_respects_product_cap():
    from src.services.game import fannes_upper_bound
    from src.services.optimizer import seesaw
    report = seesaw(SeesawConfig(d=1, restarts=4, max_iters=100, seed=3))
    assert report.best_value <= PRODUCT_CAP + 1e-9
    assert report.best_value <= fannes_upper_bound(1)
    assert report.upper_bound == fannes_upper_bound(1)
    assert len(report.per_restart_trajectories) == 4


@pytest.mark.parametrize("d", [1, 2, 3])
def test_seesaw_stays_below_one_and_the_bound(d):
    from src.services.game import fannes_upper_bound
    from src.services.optimizer import seesaw
    report = seesaw(SeesawConfig(d=d, restarts=20, seed=0))
    assert report.best_value <= fannes_upper_bound(d) + 1e-9
    assert report.best_value < 1 - 1e-3


def test_seesaw_d1_reaches_product_cap():
    from src.services.optimizer import seesaw
    first = seesaw(SeesawConfig(d=1, restarts=20, seed=0))
    second = seesaw(SeesawConfig(d=1, restarts=20, seed=0))
    assert first.best_value == pytest.approx(PRODUCT_CAP, abs=1e-5)
    assert abs(first.best_value - second.best_value) < 1e-12


def test_seesaw_trajectories_are_monotone():
    from src.services.optimizer import seesaw
    report = seesaw(SeesawConfig(d=2, restarts=2, max_iters=30, seed=1))
    for trajectory in report.per_restart_trajectories:
        assert all(b >= a - 1e-12 for a, b in zip(trajectory, trajectory[1:]))
    assert report.best_value == max(t[-1] for t in report.per_restart_trajectories)


def test_seesaw_warm_start_from_marking():
    from src.services.game import marking_strategy
    from src.services.optimizer import seesaw
    report = seesaw(SeesawConfig(d=1, restarts=1, max_iters=50), marking_strategy(1))
    assert report.best_value >= 0.5 - 1e-12
    assert report.best_value <= PRODUCT_CAP + 1e-9


def test_seesaw_is_reproducible_across_workers():
    from src.services.optimizer import seesaw
    serial = seesaw(SeesawConfig(d=1, restarts=3, max_iters=20, seed=7, workers=1))
    pooled = seesaw(SeesawConfig(d=1, restarts=3, max_iters=20, seed=7, workers=3))
    assert serial.best_value == pooled.best_value
    assert serial.best_restart == pooled.best_restart


def test_seesaw_budget(monkeypatch):
    from src.config import settings
    from src.services.optimizer import seesaw
    from src.errors import TooLarge
    monkeypatch.setattr(settings, "DENSE_BUDGET", 10)
    with pytest.raises(TooLarge):
        seesaw(SeesawConfig(d=2, restarts=1))


def test_config_validation():
    from pydantic import ValidationError
    with pytest.raises(ValidationError):
        SeesawConfig(d=0)
    with pytest.raises(ValidationError):
        SeesawConfig(d=1, tol=0.0)
    assert SeesawConfig(d=2).residual_dim == 6
