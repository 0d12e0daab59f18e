"""
Coherent state exchange.

A resource ``|E_N>`` shared by m players lets them turn ``|phi>`` into ``|psi>``
(or back) by each cyclically shifting their own registers, with no
communication. Player ``i`` owns the data register ``L_i`` of the phi/psi
layout plus resource registers ``L_i_1 .. L_i_{N+1}``.

Two backends evaluate an exchange: ``dense`` materializes every vector and is
the exact oracle at small size; ``gram`` uses the threshold-overlap sums of
:mod:`src.services.gram` and scales to N = 10^6.
"""
import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..errors import (
    ControlDimMismatch,
    DimensionTooSmall,
    DomainError,
    IdenticalStates,
    LayoutMismatch,
    TooLarge,
    WrongInput,
)
from ..utils.logger import logger
from . import gram
from .statevec import (
    LocalIsometry,
    PureState,
    SubsystemLayout,
    apply_local,
    cycle_permutation,
    inner,
    make_isometry,
    make_state,
    permutation_matrix,
    permute_subsystems,
    tensor,
)

DIRECTIONS = ("forward", "backward")
BACKENDS = ("dense", "gram")

IDENTICAL_TOL = 1e-12
ORTHOGONAL_TOL = 1e-14
INPUT_FIDELITY_TOL = 1e-9
PRODUCT_TOL = 1e-9
INTERMEDIATE_TOL = 1e-6


def _check_direction(direction: str):
    if direction not in DIRECTIONS:
        raise DomainError(f"Unknown shift direction: {direction}")


def _check_budget(amplitudes: int, what: str):
    if amplitudes > settings.DENSE_BUDGET:
        raise TooLarge(
            f"{what} needs {amplitudes} amplitudes, dense budget is {settings.DENSE_BUDGET}"
        )


# ─── Resources ────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ExchangeResource:
    phi: PureState
    psi: PureState
    N: int
    a: float
    theta: float
    psi_tilde: PureState
    N1: float
    method: str
    tag: str = ""
    stages: Tuple["ExchangeResource", ...] = ()

    @property
    def m(self) -> int:
        return len(self.phi.layout)

    @property
    def data_labels(self) -> List[str]:
        return self.phi.labels

    def register_labels(self, player: int) -> List[str]:
        """Resource registers ``X^i_1 .. X^i_{N+1}`` of ``player``."""
        if not 0 <= player < self.m:
            raise DomainError(f"Player index {player} out of range for {self.m} players")
        label = self.data_labels[player]
        return [f"{label}_{self.tag}{j}" for j in range(1, self.N + 2)]

    @property
    def resource_layout(self) -> SubsystemLayout:
        if self.stages:
            first, second = self.stages
            return first.resource_layout.concat(second.resource_layout)
        subsystems = tuple(
            (f"{label}_{self.tag}{j}", dim)
            for j in range(1, self.N + 2)
            for label, dim in self.phi.layout.subsystems
        )
        return SubsystemLayout(subsystems)

    @property
    def dense_size(self) -> int:
        if self.stages:
            return math.prod(stage.dense_size for stage in self.stages)
        return self.phi.layout.total_dim ** (self.N + 1)

    @cached_property
    def resource_state(self) -> PureState:
        if self.stages:
            first, second = self.stages
            return tensor(first.resource_state, second.resource_state)
        _check_budget(self.dense_size, f"Resource for N={self.N}")
        amps = _threshold_amplitudes(self, gram.resource_range(self.N)) / math.sqrt(self.N1)
        return make_state(self.resource_layout, amps)


@dataclass(frozen=True, eq=False)
class ExchangeOutcome:
    output_state: PureState
    residual_state: Optional[PureState]
    residual_overlap: float
    backend: str = "dense"
    direction: str = "forward"
    stage_overlaps: Tuple[float, ...] = ()


def _kron_powers(vec: np.ndarray, n: int) -> List[np.ndarray]:
    powers = [np.ones(1, dtype=complex)]
    for _ in range(n):
        powers.append(np.kron(powers[-1], vec))
    return powers


def _threshold_amplitudes(resource: ExchangeResource, thresholds: range) -> np.ndarray:
    """Unnormalized sum of ``phi^c psi~^(N+1-c)`` over ``thresholds``, slot-major."""
    slots = resource.N + 1
    phi_pows = _kron_powers(resource.phi.amplitudes, slots)
    psi_pows = _kron_powers(resource.psi_tilde.amplitudes, slots)
    amps = np.zeros(resource.dense_size, dtype=complex)
    for c in thresholds:
        amps += np.kron(phi_pows[c], psi_pows[slots - c])
    return amps


def normalization_N1(N: int, a: float) -> float:
    """Closed-form squared norm of the unnormalized resource superposition."""
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    if not 0.0 <= a < 1.0:
        raise DomainError(f"a must lie in [0, 1), got {a}")
    if a == 0.0:
        return float(N)
    return (1 + a) / (1 - a) * N - 2 * a * (1 - a ** N) / (1 - a) ** 2


def overlap_formula(N: int, a: float) -> float:
    """<E'_N|E_N> after a shift; ``1 - 1/N`` for orthogonal states."""
    return 1.0 - (1.0 - a ** N) / normalization_N1(N, a)


def build_resource(phi: PureState, psi: PureState, N: int, tag: str = "") -> ExchangeResource:
    if phi.layout != psi.layout:
        raise LayoutMismatch(f"phi and psi layouts differ: {phi.labels} vs {psi.labels}")
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    overlap = inner(phi, psi)
    a = abs(overlap)
    if a >= 1.0 - IDENTICAL_TOL:
        raise IdenticalStates("phi and psi agree up to a phase; the exchange is a global phase")
    if a <= ORTHOGONAL_TOL:
        a, theta = 0.0, 0.0
    else:
        theta = cmath.phase(overlap)
    psi_tilde = PureState(psi.layout, cmath.exp(-1j * theta) * psi.amplitudes)
    method = "orthogonal" if a == 0.0 else "direct_nonorthogonal"
    N1 = gram.resource_norm_sq(N, a)
    logger.debug(f"Built {method} resource N={N} a={a:.6g} theta={theta:.6g} N1={N1:.12g}")
    return ExchangeResource(
        phi=phi, psi=psi, N=N, a=a, theta=theta, psi_tilde=psi_tilde, N1=N1, method=method, tag=tag
    )


def residual_superposition(resource: ExchangeResource, direction: str = "forward") -> PureState:
    """Normalized ``|E'_N>`` a shift in ``direction`` leaves behind, built directly."""
    _check_direction(direction)
    if resource.stages:
        raise DomainError("Residuals of staged resources are built per stage")
    _check_budget(resource.dense_size, f"Residual for N={resource.N}")
    amps = _threshold_amplitudes(resource, gram.residual_range(resource.N, direction))
    return PureState(resource.resource_layout, amps / np.linalg.norm(amps))


# ─── Shifts ───────────────────────────────────────────────────────────────────

def _player_layout(resource: ExchangeResource, player: int) -> SubsystemLayout:
    labels = [resource.data_labels[player]] + resource.register_labels(player)
    dim = resource.phi.layout.dims[player]
    return SubsystemLayout(tuple((label, dim) for label in labels))


def shift_isometry(resource: ExchangeResource, player: int, direction: str = "forward") -> LocalIsometry:
    """Cyclic shift of ``player``'s N+2 registers as a permutation unitary."""
    _check_direction(direction)
    layout = _player_layout(resource, player)
    matrix = permutation_matrix(layout, cycle_permutation(layout.labels, direction))
    return make_isometry(layout, layout, matrix)


def _phase_isometry(resource: ExchangeResource, angle: float) -> LocalIsometry:
    layout = resource.phi.layout.select([resource.data_labels[0]])
    return make_isometry(layout, layout, cmath.exp(1j * angle) * np.eye(layout.total_dim))


def _check_source(state: PureState, source: PureState):
    if state.layout != source.layout:
        raise LayoutMismatch(f"Input layout {state.labels} does not match {source.labels}")
    if abs(inner(source, state)) < 1.0 - INPUT_FIDELITY_TOL:
        raise WrongInput("Input is not the declared source state of this exchange")


# ─── Exchange ─────────────────────────────────────────────────────────────────

def phase_only_outcome(input_state: PureState, target: PureState, direction: str = "forward") -> ExchangeOutcome:
    """Exchange between states equal up to a phase: the resource is untouched."""
    if abs(inner(input_state, target)) < 1.0 - INPUT_FIDELITY_TOL:
        raise WrongInput("Phase-only exchange needs states equal up to a phase")
    return ExchangeOutcome(
        output_state=target, residual_state=None, residual_overlap=1.0, backend="phase", direction=direction
    )


def exchange(
    input_state: PureState,
    resource: ExchangeResource,
    direction: str = "forward",
    backend: str = "dense",
) -> ExchangeOutcome:
    """Run the shift procedure: forward maps phi to psi, backward maps psi to phi."""
    _check_direction(direction)
    if backend not in BACKENDS:
        raise DomainError(f"Unknown backend: {backend}")
    if resource.method == "via_intermediate":
        return exchange_via_intermediate(input_state, resource, direction, backend)

    source, target = (resource.phi, resource.psi) if direction == "forward" else (resource.psi, resource.phi)
    _check_source(input_state, source)
    logger.debug(f"Exchange {direction} N={resource.N} a={resource.a:.6g} backend={backend}")

    if backend == "gram":
        overlap = gram.residual_overlap(resource.N, resource.a, direction)
        return ExchangeOutcome(target, None, overlap, backend, direction)

    _check_budget(resource.dense_size * input_state.layout.total_dim, f"Exchange at N={resource.N}")
    state = tensor(input_state, resource.resource_state)
    if direction == "backward" and resource.theta:
        state = apply_local(_phase_isometry(resource, -resource.theta), state)
    for player in range(resource.m):
        labels = [resource.data_labels[player]] + resource.register_labels(player)
        state = permute_subsystems(state, cycle_permutation(labels, direction))
    if direction == "forward" and resource.theta:
        state = apply_local(_phase_isometry(resource, resource.theta), state)

    output, residual = _split_product(state, resource, residual_superposition(resource, direction))
    overlap = float(np.real(inner(residual, resource.resource_state)))
    return ExchangeOutcome(output, residual, overlap, backend, direction)


def _split_product(
    state: PureState, resource: ExchangeResource, reference: PureState
) -> Tuple[PureState, PureState]:
    """Factor ``state`` as (data registers) x (resource registers).

    The residual phase is fixed against ``reference`` so the data factor
    carries no stray global phase.
    """
    data_dim = resource.phi.layout.total_dim
    matrix = state.amplitudes.reshape(data_dim, -1)
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    if len(s) > 1 and s[1] > PRODUCT_TOL:
        raise WrongInput(f"Shifted state is not a product across data and resource (s1={s[1]:.3g})")
    residual = vh[0]
    alignment = np.vdot(residual, reference.amplitudes)
    if abs(alignment) > ORTHOGONAL_TOL:
        residual = residual * (alignment / abs(alignment))
    output = matrix @ residual.conj()
    return (
        PureState(resource.phi.layout, output / np.linalg.norm(output)),
        PureState(resource.resource_layout, residual),
    )


# ─── Controlled exchange ──────────────────────────────────────────────────────

def _check_controls(joint: PureState, resource: ExchangeResource, controls: Sequence[str]):
    if len(controls) != resource.m:
        raise ControlDimMismatch(f"Need {resource.m} control qubits, got {len(controls)}")
    for label in controls:
        if joint.layout.dim(label) != 2:
            raise ControlDimMismatch(f"Control {label} has dimension {joint.layout.dim(label)}, expected 2")
    for label, dim in resource.phi.layout.subsystems:
        if joint.layout.dim(label) != dim:
            raise LayoutMismatch(f"Data register {label} has dimension {joint.layout.dim(label)}, expected {dim}")


def controlled_shift(resource: ExchangeResource, player: int, control: str, direction: str = "forward") -> LocalIsometry:
    """``|0><0| x I + |1><1| x (phase * shift)`` on (control, player registers)."""
    shift = shift_isometry(resource, player, direction)
    n = shift.input_layout.total_dim
    phase = 1.0
    if player == 0 and resource.theta:
        phase = cmath.exp(1j * resource.theta if direction == "forward" else -1j * resource.theta)
    matrix = np.zeros((2 * n, 2 * n), dtype=complex)
    matrix[:n, :n] = np.eye(n)
    matrix[n:, n:] = phase * shift.matrix
    layout = SubsystemLayout(((control, 2),)).concat(shift.input_layout)
    return make_isometry(layout, layout, matrix)


def controlled_exchange(
    joint: PureState,
    resource: ExchangeResource,
    controls: Sequence[str],
    direction: str = "forward",
) -> PureState:
    """Attach the resource to ``joint`` and shift each player's registers when its control is 1.

    ``controls[i]`` is the control qubit of player ``i``. The result holds the
    joint registers followed by the resource registers.
    """
    _check_direction(direction)
    if resource.stages:
        raise DomainError("Controlled exchange runs on single-stage resources")
    _check_controls(joint, resource, controls)
    _check_budget(joint.layout.total_dim * resource.dense_size, f"Controlled exchange at N={resource.N}")
    state = tensor(joint, resource.resource_state)
    for player, control in enumerate(controls):
        state = apply_local(controlled_shift(resource, player, control, direction), state)
    return state


def controlled_joint_state(
    alpha: complex,
    beta: complex,
    gamma: PureState,
    data: PureState,
    controls: Sequence[str],
) -> PureState:
    """``alpha|0^m>|gamma> + beta|1^m>|data>`` with controls first."""
    if gamma.layout != data.layout:
        raise LayoutMismatch("gamma must live on the data layout")
    ctrl_layout = SubsystemLayout(tuple((label, 2) for label in controls))
    zeros = np.zeros(ctrl_layout.total_dim, dtype=complex)
    ones = np.zeros(ctrl_layout.total_dim, dtype=complex)
    zeros[0], ones[-1] = 1.0, 1.0
    amps = alpha * np.kron(zeros, gamma.amplitudes) + beta * np.kron(ones, data.amplitudes)
    return make_state(ctrl_layout.concat(data.layout), amps)


def coherence_overlap(
    alpha: complex,
    beta: complex,
    gamma: PureState,
    resource: ExchangeResource,
    controls: Sequence[str],
    direction: str = "forward",
) -> complex:
    """<ideal|actual> for a controlled exchange.

    The ideal output keeps the resource intact on both branches; for real
    non-negative amplitudes this equals ``|alpha|^2 + |beta|^2 <E'_N|E_N>``.
    """
    source, target = (resource.phi, resource.psi) if direction == "forward" else (resource.psi, resource.phi)
    joint = controlled_joint_state(alpha, beta, gamma, source, controls)
    actual = controlled_exchange(joint, resource, controls, direction)
    ideal = tensor(controlled_joint_state(alpha, beta, gamma, target, controls), resource.resource_state)
    return inner(ideal, actual)


# ─── Exchange through an orthogonal intermediate ──────────────────────────────

def find_intermediate(phi: PureState, psi: PureState) -> PureState:
    """First standard-basis candidate left over after projecting out phi and psi."""
    dim = phi.layout.total_dim
    if dim < 3:
        raise DimensionTooSmall(f"Intermediate exchange needs total dimension >= 3, got {dim}")
    basis = [phi.amplitudes]
    rest = psi.amplitudes - np.vdot(phi.amplitudes, psi.amplitudes) * phi.amplitudes
    if np.linalg.norm(rest) > INTERMEDIATE_TOL:
        basis.append(rest / np.linalg.norm(rest))
    for index in range(dim):
        candidate = np.zeros(dim, dtype=complex)
        candidate[index] = 1.0
        for vec in basis:
            candidate = candidate - np.vdot(vec, candidate) * vec
        norm = np.linalg.norm(candidate)
        if norm > INTERMEDIATE_TOL:
            return PureState(phi.layout, candidate / norm)
    raise DimensionTooSmall("No intermediate state orthogonal to phi and psi")


def build_intermediate_resource(phi: PureState, psi: PureState, N: int) -> ExchangeResource:
    """Two-stage resource ``|E_N>|F_N>``: phi to eta, then eta to psi."""
    if phi.layout != psi.layout:
        raise LayoutMismatch(f"phi and psi layouts differ: {phi.labels} vs {psi.labels}")
    eta = find_intermediate(phi, psi)
    first = build_resource(phi, eta, N, tag="e")
    second = build_resource(eta, psi, N, tag="f")
    overlap = inner(phi, psi)
    theta = cmath.phase(overlap) if abs(overlap) > ORTHOGONAL_TOL else 0.0
    return ExchangeResource(
        phi=phi,
        psi=psi,
        N=N,
        a=abs(overlap),
        theta=theta,
        psi_tilde=PureState(psi.layout, cmath.exp(-1j * theta) * psi.amplitudes),
        N1=first.N1 * second.N1,
        method="via_intermediate",
        stages=(first, second),
    )


def exchange_via_intermediate(
    input_state: PureState,
    resource: ExchangeResource,
    direction: str = "forward",
    backend: str = "dense",
) -> ExchangeOutcome:
    first, second = resource.stages
    order = (first, second) if direction == "forward" else (second, first)
    state = input_state
    outcomes = []
    for stage in order:
        outcome = exchange(state, stage, direction, backend)
        outcomes.append(outcome)
        state = outcome.output_state
    residual = None
    if all(outcome.residual_state is not None for outcome in outcomes):
        by_stage = outcomes if direction == "forward" else outcomes[::-1]
        residual = tensor(by_stage[0].residual_state, by_stage[1].residual_state)
    overlaps = tuple(outcome.residual_overlap for outcome in outcomes)
    return ExchangeOutcome(
        output_state=state,
        residual_state=residual,
        residual_overlap=math.prod(overlaps),
        backend=backend,
        direction=direction,
        stage_overlaps=overlaps,
    )
