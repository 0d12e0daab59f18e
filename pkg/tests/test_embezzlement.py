"""
Embezzlement tests: lattice nets, nearest points and the universal family.
"""
import math

import numpy as np
import pytest

from src.services.statevec import SubsystemLayout, make_state


# ─── Nets ─────────────────────────────────────────────────────────────────────

def test_lattice_radius():
    from src.services.epsilon_net import lattice_radius
    from src.errors import DomainError
    assert lattice_radius(0.5) == 2
    assert lattice_radius(0.3) == 4
    with pytest.raises(DomainError):
        lattice_radius(0.0)


def test_net_points_are_canonical_unit_rays():
    from src.services.epsilon_net import lattice_net
    points = lattice_net(3, 0.5)
    assert np.allclose(np.linalg.norm(points, axis=1), 1.0)
    for row in points:
        lead = row[np.argmax(np.abs(row) > 1e-12)]
        assert abs(lead.imag) < 1e-9 and lead.real > 0


def test_net_has_no_duplicate_rays():
    from src.services.epsilon_net import lattice_net
    points = lattice_net(2, 0.5)
    overlaps = np.abs(points.conj() @ points.T)
    np.fill_diagonal(overlaps, 0.0)
    assert np.max(overlaps) < 1 - 1e-9


def test_net_contains_basis_states():
    from src.services.epsilon_net import lattice_net, nearest_point
    points = lattice_net(4, 0.5)
    for k in range(4):
        target = np.zeros(4, dtype=complex)
        target[k] = 1.0
        _, overlap = nearest_point(points, target)
        assert abs(overlap - 1.0) < 1e-12


def test_net_size_limit(monkeypatch):
    from src.config import settings
    from src.services.epsilon_net import lattice_net
    from src.errors import NetTooLarge
    monkeypatch.setattr(settings, "NET_MAX_POINTS", 50)
    with pytest.raises(NetTooLarge):
        lattice_net(4, 0.25)


def test_ray_distance():
    from src.services.epsilon_net import ray_distance
    assert ray_distance(1.0) == 0.0
    assert abs(ray_distance(0.0) - math.sqrt(2)) < 1e-15


def test_measured_covering_radius_shrinks_with_epsilon():
    from src.services.epsilon_net import lattice_net, measured_covering_radius
    coarse = measured_covering_radius(lattice_net(2, 1.0), probes=256, seed=1)
    fine = measured_covering_radius(lattice_net(2, 0.2), probes=256, seed=1)
    assert fine < coarse
    assert coarse > 0.7


# ─── Universal family ─────────────────────────────────────────────────────────

def test_family_layout():
    from src.services.embezzlement import universal_family
    family = universal_family(2, 2, 4, 0.5, probes=64)
    assert family.layout.labels == ["X1", "X2"]
    assert family.phi.amplitudes[0] == 1.0
    assert len(family) == family.points.shape[0]


def test_embezzle_zero_target_is_phase_only():
    from src.services.embezzlement import embezzle, universal_family
    from src.services.statevec import basis_state
    family = universal_family(2, 2, 4, 0.5, probes=64)
    outcome = embezzle(family, basis_state(family.layout, [0, 0]))
    assert outcome.backend == "phase"
    assert abs(outcome.fidelity - 1.0) < 1e-12


@pytest.mark.parametrize("backend", ["gram", "dense"])
def test_embezzle_bell_target(backend):
    from src.services.embezzlement import embezzle, universal_family
    family = universal_family(2, 2, 3, 0.5, probes=64)
    bell = make_state(family.layout, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])
    outcome = embezzle(family, bell, backend)
    assert outcome.net_distance < 1e-6
    assert outcome.fidelity >= (1 - 1 / 3) * (1 - 0.5 ** 2 / 2) - 1e-9


def test_embezzle_random_targets_at_fine_net():
    from src.services.embezzlement import embezzle, universal_family
    from src.services.statevec import random_state
    N, eps = 100, 0.25
    family = universal_family(2, 2, N, eps, probes=64)
    rng = np.random.default_rng(25)
    for _ in range(25):
        outcome = embezzle(family, random_state(family.layout, rng))
        assert outcome.fidelity >= 0.9


def test_embezzle_net_points_lose_only_the_resource_overlap():
    from src.services.embezzlement import embezzle, universal_family
    N = 100
    family = universal_family(2, 2, N, 0.25, probes=64)
    for index in (1, len(family) // 3, len(family) // 2, len(family) - 1):
        outcome = embezzle(family, family.state(index))
        assert outcome.net_distance < 1e-6
        assert outcome.fidelity >= 1 - 1 / N - 1e-9


def test_embezzle_layout_mismatch():
    from src.services.embezzlement import embezzle, universal_family
    from src.services.statevec import basis_state
    from src.errors import LayoutMismatch
    family = universal_family(1, 2, 2, 0.5, probes=32)
    with pytest.raises(LayoutMismatch):
        embezzle(family, basis_state(SubsystemLayout.of(("Y", 2)), [0]))


def test_family_rejects_wrong_dims():
    from src.services.embezzlement import universal_family
    from src.errors import DomainError
    with pytest.raises(DomainError):
        universal_family(2, [2, 2, 2], 2, 0.5)
