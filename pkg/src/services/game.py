"""
Two-player cooperative game with a quantum referee.

The referee prepares ``(|0>|00> + |1>|phi>)/sqrt(2)`` on (R, S, T), sends S to
Alice and T to Bob, receives one answer qubit from each and accepts on
``|gamma> = (|000> + |111>)/sqrt(2)`` over (R, A, B). Alice and Bob share a
state on (XA, XB) of per-party dimension d.

Win probabilities are evaluated three ways: a full simulation of the protocol
(``play(..., "dense")``), the branch-operator formula used by the optimizer
(``win_probability``), and the closed form of the prescribed family
(``play(..., "gram")``).
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union

import numpy as np

from ..config import settings
from ..errors import (
    BoundViolation,
    DimensionMismatch,
    DomainError,
    LayoutMismatch,
    MissingRegisters,
    NotUnitary,
    TooLarge,
    UnsupportedStrategy,
)
from ..utils.logger import logger
from . import gram
from .exchange import build_resource
from .statevec import (
    ISOMETRY_TOL,
    LocalIsometry,
    PureState,
    SubsystemLayout,
    apply_local,
    basis_state,
    entropy,
    fidelity,
    make_isometry,
    make_state,
    random_unitary,
    reduce,
    regroup,
    reorder,
    tensor,
    trace_distance,
)

QUTRIT = 3
CAP_TOL = 1e-9
CHAIN_TOL = 1e-9
MAX_EXACT_D_EXPONENT = 30

REFEREE_LAYOUT = SubsystemLayout.of(("R", 2), ("S", QUTRIT), ("T", QUTRIT))
ANSWER_LAYOUT = SubsystemLayout.of(("R", 2), ("A", 2), ("B", 2))
PAIR_LAYOUT = SubsystemLayout.of(("S", QUTRIT), ("T", QUTRIT))

# <s,t| of the two branch inputs |00> and phi, as 3x3 matrices.
BRANCH_INPUTS = (
    np.diag([1.0, 0.0, 0.0]).astype(complex),
    np.diag([0.0, 1.0, 1.0]).astype(complex) / math.sqrt(2),
)


def target_phi() -> PureState:
    """phi = (|11> + |22>)/sqrt(2) on (S, T)."""
    return make_state(PAIR_LAYOUT, BRANCH_INPUTS[1].reshape(-1))


def zero_pair() -> PureState:
    return basis_state(PAIR_LAYOUT, [0, 0])


# ─── Referee ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GameSpec:
    referee_layout: SubsystemLayout
    initial_state: PureState
    accept_vector: PureState

    @property
    def accept_projector(self) -> np.ndarray:
        return np.outer(self.accept_vector.amplitudes, self.accept_vector.amplitudes.conj())

    @property
    def reject_projector(self) -> np.ndarray:
        return np.eye(ANSWER_LAYOUT.total_dim) - self.accept_projector


def game_spec() -> GameSpec:
    amps = np.concatenate([zero_pair().amplitudes, target_phi().amplitudes]) / math.sqrt(2)
    gamma = np.zeros(ANSWER_LAYOUT.total_dim, dtype=complex)
    gamma[0] = gamma[-1] = 1 / math.sqrt(2)
    return GameSpec(
        referee_layout=REFEREE_LAYOUT,
        initial_state=make_state(REFEREE_LAYOUT, amps),
        accept_vector=make_state(ANSWER_LAYOUT, gamma),
    )


def referee_outcome_probability(returned: PureState) -> float:
    """Probability that the referee's measurement on (R, A, B) accepts."""
    missing = [label for label in ANSWER_LAYOUT.labels if label not in returned.labels]
    if missing:
        raise MissingRegisters(f"Returned state lacks registers {missing}")
    for label, dim in ANSWER_LAYOUT.subsystems:
        if returned.layout.dim(label) != dim:
            raise DimensionMismatch(f"Register {label} must be a qubit")
    rest = [label for label in returned.labels if label not in ANSWER_LAYOUT.labels]
    ordered = reorder(returned, ANSWER_LAYOUT.labels + rest)
    rows = ordered.amplitudes.reshape(ANSWER_LAYOUT.total_dim, -1)
    amplitude = (rows[0] + rows[-1]) / math.sqrt(2)
    return float(np.clip(np.vdot(amplitude, amplitude).real, 0.0, 1.0))


# ─── Strategies ───────────────────────────────────────────────────────────────

def _alice_layouts(d: int, y_dim: int) -> Tuple[SubsystemLayout, SubsystemLayout]:
    return SubsystemLayout.of(("S", QUTRIT), ("XA", d)), SubsystemLayout.of(("A", 2), ("YA", y_dim))


def _bob_layouts(d: int, y_dim: int) -> Tuple[SubsystemLayout, SubsystemLayout]:
    return SubsystemLayout.of(("T", QUTRIT), ("XB", d)), SubsystemLayout.of(("B", 2), ("YB", y_dim))


def alice_isometry(matrix, d: int, tol: float = ISOMETRY_TOL) -> LocalIsometry:
    matrix = np.asarray(matrix)
    return make_isometry(*_alice_layouts(d, matrix.shape[0] // 2), matrix, tol)


def bob_isometry(matrix, d: int, tol: float = ISOMETRY_TOL) -> LocalIsometry:
    matrix = np.asarray(matrix)
    return make_isometry(*_bob_layouts(d, matrix.shape[0] // 2), matrix, tol)


def shared_layout(d: int) -> SubsystemLayout:
    return SubsystemLayout.of(("XA", d), ("XB", d))


@dataclass(frozen=True, eq=False)
class Strategy:
    d: int
    shared_state: PureState
    alice: LocalIsometry
    bob: LocalIsometry

    def __post_init__(self):
        if self.shared_state.layout != shared_layout(self.d):
            raise LayoutMismatch(f"Shared state must live on (XA:{self.d}, XB:{self.d})")
        if self.alice.input_layout != _alice_layouts(self.d, 1)[0]:
            raise LayoutMismatch("Alice must act on (S:3, XA:d)")
        if self.bob.input_layout != _bob_layouts(self.d, 1)[0]:
            raise LayoutMismatch("Bob must act on (T:3, XB:d)")
        if self.alice.output_labels != ["A", "YA"] or self.alice.output_layout.dim("A") != 2:
            raise LayoutMismatch("Alice must answer on (A:2, YA)")
        if self.bob.output_labels != ["B", "YB"] or self.bob.output_layout.dim("B") != 2:
            raise LayoutMismatch("Bob must answer on (B:2, YB)")

    @property
    def alice_branches(self) -> np.ndarray:
        """A_0, A_1 stacked: ``(<a| x I) A`` for a = 0, 1."""
        return self.alice.matrix.reshape(2, -1, QUTRIT * self.d)

    @property
    def bob_branches(self) -> np.ndarray:
        return self.bob.matrix.reshape(2, -1, QUTRIT * self.d)

    @property
    def shared_matrix(self) -> np.ndarray:
        return self.shared_state.amplitudes.reshape(self.d, self.d)

    def branch_inputs(self) -> Tuple[np.ndarray, np.ndarray]:
        """``|00>|psi>`` and ``|phi>|psi>`` as (S XA) x (T XB) matrices."""
        psi = self.shared_matrix
        return tuple(np.kron(block, psi) for block in BRANCH_INPUTS)


@dataclass(frozen=True, eq=False)
class PrescribedStrategy:
    """Marking unitary followed by a controlled exchange of phi for |00> on ``|E_N>``."""

    N: int

    @property
    def d(self) -> int:
        return QUTRIT ** (self.N + 1)

    @property
    def log2_d(self) -> float:
        return (self.N + 1) * math.log2(QUTRIT)

    @property
    def reported_d(self) -> Union[int, str]:
        return self.d if self.N <= MAX_EXACT_D_EXPONENT else f"3^({self.N + 1})"

    @cached_property
    def materialized(self) -> Strategy:
        d = self.d
        y_dim = QUTRIT * d
        if 8 * y_dim * y_dim > settings.DENSE_BUDGET:
            raise TooLarge(f"Prescribed strategy N={self.N} exceeds the dense budget")
        resource = build_resource(target_phi(), zero_pair(), self.N)
        shared = regroup(
            resource.resource_state,
            [("XA", resource.register_labels(0)), ("XB", resource.register_labels(1))],
        )
        matrix = _marked_shift_matrix(self.N)
        return Strategy(d, shared, alice_isometry(matrix, d), bob_isometry(matrix, d))


def _marked_shift_matrix(N: int) -> np.ndarray:
    """Adjoin |0>, mark a=1 on s in {1,2}, then shift (s, x_1..x_{N+1}) forward when marked."""
    registers = N + 2
    n = QUTRIT ** registers
    digits = np.indices((QUTRIT,) * registers).reshape(registers, -1)
    marked = digits[0] != 0
    shifted = np.roll(digits, 1, axis=0)
    target = np.where(marked, n + np.ravel_multi_index(shifted, (QUTRIT,) * registers), np.arange(n))
    matrix = np.zeros((2 * n, n))
    matrix[target, np.arange(n)] = 1.0
    return matrix


def prescribed_strategy(N: int) -> PrescribedStrategy:
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    return PrescribedStrategy(N)


def idle_strategy(d: int = 1) -> Strategy:
    """Answer with fresh |0> qubits and keep everything else."""
    n = QUTRIT * d
    matrix = np.vstack([np.eye(n), np.zeros((n, n))])
    shared = basis_state(shared_layout(d), [0, 0])
    return Strategy(d, shared, alice_isometry(matrix, d), bob_isometry(matrix, d))


def marking_strategy(d: int = 1) -> Strategy:
    """Apply the marking unitary only: answer 1 exactly when the qutrit is 1 or 2."""
    n = QUTRIT * d
    marked = np.repeat(np.array([0.0, 1.0, 1.0]), d)
    matrix = np.vstack([np.diag(1.0 - marked), np.diag(marked)])
    shared = basis_state(shared_layout(d), [0, 0])
    return Strategy(d, shared, alice_isometry(matrix, d), bob_isometry(matrix, d))


# ─── Evaluation ───────────────────────────────────────────────────────────────

def win_probability(strategy: Strategy) -> float:
    """``1/4 || sum_r A_r (I_r x psi) B_r^T ||_F^2``."""
    alice, bob = strategy.alice_branches, strategy.bob_branches
    total = sum(alice[r] @ block @ bob[r].T for r, block in enumerate(strategy.branch_inputs()))
    return float(0.25 * np.vdot(total, total).real)


def _simulate(strategy: Strategy) -> float:
    d = strategy.d
    y_a = strategy.alice.output_layout.dim("YA")
    y_b = strategy.bob.output_layout.dim("YB")
    peak = max(18 * d * d, 4 * y_a * QUTRIT * d, 8 * y_a * y_b)
    if peak > settings.DENSE_BUDGET:
        raise TooLarge(f"Dense play needs {peak} amplitudes, budget is {settings.DENSE_BUDGET}")
    state = tensor(game_spec().initial_state, strategy.shared_state)
    state = apply_local(strategy.alice, state)
    state = apply_local(strategy.bob, state)
    return referee_outcome_probability(state)


def play(strategy: Union[Strategy, PrescribedStrategy], backend: str = "dense") -> float:
    if backend == "gram":
        if not isinstance(strategy, PrescribedStrategy):
            raise UnsupportedStrategy("The gram backend only evaluates prescribed strategies")
        value = 0.5 + 0.5 * gram.residual_overlap(strategy.N, 0.0)
        logger.debug(f"Gram play N={strategy.N}: {value!r}")
        return value
    if backend != "dense":
        raise DomainError(f"Unknown backend: {backend}")
    concrete = strategy.materialized if isinstance(strategy, PrescribedStrategy) else strategy
    value = _simulate(concrete)
    cap = fannes_upper_bound(concrete.d)
    if value > cap + CAP_TOL:
        raise BoundViolation(f"Win probability {value!r} exceeds the d={concrete.d} bound {cap!r}")
    logger.debug(f"Dense play d={concrete.d}: {value!r}")
    return value


# ─── Bounds ───────────────────────────────────────────────────────────────────

def fannes_bound_from_log2(log2_d: float) -> float:
    return 1.0 - 1.0 / (32.0 * (math.log2(QUTRIT) + log2_d) ** 2)


def fannes_upper_bound(d: int) -> float:
    """``1 - 1/(32 log2(3d)^2)``; d is the per-party dimension of the shared state."""
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    return fannes_bound_from_log2(math.log2(d))


def unentangled_upper_bound() -> float:
    """Cap at d = 1: one half plus half the largest product-state overlap with phi."""
    return 0.5 + 0.5 / math.sqrt(2)


def non_closure_witness(d0: int) -> int:
    """Smallest N whose prescribed value beats every strategy of dimension ``d0``."""
    cap = fannes_upper_bound(d0)
    N = max(1, math.floor(16.0 * math.log2(QUTRIT * d0) ** 2))
    while 1.0 - 1.0 / (2 * N) <= cap:
        N += 1
    while N > 1 and 1.0 - 1.0 / (2 * (N - 1)) > cap:
        N -= 1
    return N


def _branch_products(strategy: Strategy) -> Tuple[np.ndarray, np.ndarray]:
    alice, bob = strategy.alice_branches, strategy.bob_branches
    return alice[1].conj().T @ alice[0], bob[1].conj().T @ bob[0]


def branch_contraction_norms(strategy: Strategy) -> Tuple[float, float]:
    """Operator norms of ``A_1* A_0`` and ``B_1* B_0``."""
    x, y = _branch_products(strategy)
    return float(np.linalg.norm(x, 2)), float(np.linalg.norm(y, 2))


def branch_overlap_bound(strategy: Strategy) -> float:
    """``1/2 + 1/2 |<phi psi| (A_1*A_0 x B_1*B_0) |00 psi>|``, an upper bound on the win probability."""
    x, y = _branch_products(strategy)
    zero_block, phi_block = strategy.branch_inputs()
    value = 0.5 + 0.5 * abs(np.vdot(phi_block, x @ zero_block @ y.T))
    won = win_probability(strategy)
    if won > value + CHAIN_TOL:
        raise BoundViolation(f"Win probability {won!r} exceeds branch bound {value!r}")
    return float(value)


@dataclass
class ChainReport:
    d: int
    overlap: float
    fidelity: float
    cap: float
    trace_norm: float
    trace_norm_floor: float
    entropy_deficit: float


def _as_unitary(op: Union[LocalIsometry, np.ndarray], layout: SubsystemLayout) -> LocalIsometry:
    matrix = np.asarray(op.matrix if isinstance(op, LocalIsometry) else op, dtype=complex)
    n = layout.total_dim
    if matrix.shape != (n, n):
        raise NotUnitary(f"Expected a square {n}x{n} unitary, got shape {matrix.shape}")
    if np.max(np.abs(matrix.conj().T @ matrix - np.eye(n))) > 1e-10:
        raise NotUnitary("Operator is not unitary")
    return LocalIsometry(layout, layout, matrix)


def random_chain_unitaries(d: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    return random_unitary(QUTRIT * d, rng), random_unitary(QUTRIT * d, rng)


def _shared_state_of(strategy: Union[Strategy, PrescribedStrategy, PureState]) -> PureState:
    if isinstance(strategy, PrescribedStrategy):
        return strategy.materialized.shared_state
    if isinstance(strategy, Strategy):
        return strategy.shared_state
    return strategy


def bound_chain_check(
    strategy: Union[Strategy, PrescribedStrategy, PureState],
    unitary_a: Union[LocalIsometry, np.ndarray],
    unitary_b: Union[LocalIsometry, np.ndarray],
) -> ChainReport:
    """Check ``|<phi,psi|U_A x U_B|00,psi>| <= F(rho, xi) <= sqrt(1 - ||rho - xi||_1^2 / 4)``.

    ``rho`` and ``xi`` are Alice's (S, XA) marginals of ``|phi>|psi>`` and
    ``(U_A x U_B)|00>|psi>``.

    ``strategy`` supplies psi: a strategy, a prescribed strategy or a bare
    shared state on (XA, XB). The trace norm must also reach
    ``1 / (2 log2(3d))``, the floor the one-bit entropy deficit forces.
    """
    shared_state = _shared_state_of(strategy)
    d = shared_state.layout.dims[0]
    if shared_state.layout != shared_layout(d):
        raise LayoutMismatch("Shared state must live on (XA:d, XB:d)")
    u_a = _as_unitary(unitary_a, _alice_layouts(d, d)[0])
    u_b = _as_unitary(unitary_b, _bob_layouts(d, d)[0])

    honest = tensor(target_phi(), shared_state)
    moved = apply_local(u_b, apply_local(u_a, tensor(zero_pair(), shared_state)))
    moved = reorder(moved, honest.labels)
    overlap = abs(np.vdot(honest.amplitudes, moved.amplitudes))

    rho = reduce(honest, ["S", "XA"])
    xi = reduce(moved, ["S", "XA"])
    fid = fidelity(rho, xi)
    distance = trace_distance(rho, xi)
    cap = math.sqrt(max(0.0, 1.0 - 0.25 * distance ** 2))
    if overlap > fid + CHAIN_TOL:
        raise BoundViolation(f"Overlap {overlap!r} exceeds fidelity {fid!r}")
    if fid > cap + CHAIN_TOL:
        raise BoundViolation(f"Fidelity {fid!r} exceeds trace-distance cap {cap!r}")
    floor = 1.0 / (2.0 * math.log2(QUTRIT * d))
    if distance < floor - CHAIN_TOL:
        raise BoundViolation(f"Trace norm {distance!r} is below the entropy-deficit floor {floor!r}")
    return ChainReport(
        d=d,
        overlap=float(overlap),
        fidelity=fid,
        cap=cap,
        trace_norm=distance,
        trace_norm_floor=floor,
        entropy_deficit=entropy(rho) - entropy(xi),
    )
