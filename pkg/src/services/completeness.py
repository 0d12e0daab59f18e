"""
One extra round that pushes a proof system's completeness towards 1.

The model starts from the purified final state
``sqrt(1-p)|0>_A|phi0> + sqrt(p)|1>_A|phi1>`` of an m-prover protocol. The
verifier fans A out into pseudo-copies A1..Am and hands them to the provers,
who run a controlled exchange of phi1 back to phi0. The verifier then accepts
on ``sqrt(1-c)|0,0^m> + sqrt(c)|1,1^m>``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import BackendUnsupported, BoundViolation, DomainError, NotAQubit
from ..utils.logger import logger
from . import gram
from .exchange import build_resource, controlled_exchange
from .statevec import (
    LocalIsometry,
    PureState,
    SubsystemLayout,
    apply_local,
    basis_state,
    inner,
    make_isometry,
    make_state,
    reorder,
    tensor,
)

ORTHOGONALITY_TOL = 1e-12
CEILING_TOL = 1e-12
SWEEP_TOL = 1e-10
ANSWER = "A"


def copy_labels(m: int) -> List[str]:
    return [f"{ANSWER}{i}" for i in range(1, m + 1)]


def residual_layout(m: int, dims: Optional[Sequence[int]] = None) -> SubsystemLayout:
    dims = list(dims) if dims is not None else [2] + [1] * (m - 1)
    if len(dims) != m:
        raise DomainError(f"Need one residual dimension per prover, got {len(dims)} for m={m}")
    return SubsystemLayout(tuple((f"P{i}", dim) for i, dim in enumerate(dims, start=1)))


@dataclass(frozen=True, eq=False)
class ProofSystemModel:
    p: float
    c: float
    s: float
    m: int
    phi0: PureState
    phi1: PureState

    @property
    def final_state(self) -> PureState:
        answer = SubsystemLayout.of((ANSWER, 2))
        amps = np.concatenate(
            [math.sqrt(1 - self.p) * self.phi0.amplitudes, math.sqrt(self.p) * self.phi1.amplitudes]
        )
        return make_state(answer.concat(self.phi0.layout), amps)


@dataclass
class RoundOutcome:
    acceptance_probability: float
    N: int
    m: int
    backend: str


def _check_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def make_model(
    p: float,
    c: float,
    s: float = 0.0,
    m: int = 2,
    residual_dims: Optional[Sequence[int]] = None,
    phi0: Optional[PureState] = None,
    phi1: Optional[PureState] = None,
) -> ProofSystemModel:
    for name, value in (("p", p), ("c", c), ("s", s)):
        _check_probability(name, value)
    if not s < c:
        raise DomainError(f"Soundness {s} must be below completeness {c}")
    if m < 1:
        raise DomainError(f"Need at least one prover, got m={m}")
    layout = residual_layout(m, residual_dims)
    if phi0 is None or phi1 is None:
        if layout.dims[0] < 2:
            raise DomainError("Default residuals need the first prover register to have dimension >= 2")
        phi0 = basis_state(layout, [0] * m)
        phi1 = basis_state(layout, [1] + [0] * (m - 1))
    if abs(inner(phi0, phi1)) > ORTHOGONALITY_TOL:
        raise DomainError("phi0 and phi1 must be orthogonal")
    return ProofSystemModel(p=p, c=c, s=s, m=m, phi0=phi0, phi1=phi1)


def verifier_rotation(c: float, label: str = ANSWER) -> LocalIsometry:
    """``|0> -> sqrt(1-c)|0> - sqrt(c)|1>``, ``|1> -> sqrt(c)|0> + sqrt(1-c)|1>``."""
    _check_probability("c", c)
    layout = SubsystemLayout.of((label, 2))
    root_c, root_rest = math.sqrt(c), math.sqrt(1 - c)
    matrix = np.array([[root_rest, root_c], [-root_c, root_rest]])
    return make_isometry(layout, layout, matrix)


def pseudo_copy(state: PureState, source_label: str, m: int) -> PureState:
    """Fan ``source_label`` out: ``|b>|...> -> |b>|b^m>|...>`` on fresh A1..Am."""
    if state.layout.dim(source_label) != 2:
        raise NotAQubit(f"{source_label} has dimension {state.layout.dim(source_label)}")
    labels = copy_labels(m)
    out_layout = SubsystemLayout(((source_label, 2),) + tuple((label, 2) for label in labels))
    matrix = np.zeros((out_layout.total_dim, 2))
    matrix[0, 0] = 1.0
    matrix[-1, 1] = 1.0
    op = make_isometry(SubsystemLayout.of((source_label, 2)), out_layout, matrix)
    return apply_local(op, state)


def _uncopy(m: int) -> LocalIsometry:
    """``|b, x> -> |b, x xor b^m>`` on (A, A1..Am)."""
    layout = SubsystemLayout(((ANSWER, 2),) + tuple((label, 2) for label in copy_labels(m)))
    n = layout.total_dim
    half = n // 2
    source = np.arange(n)
    source[half:] = half + (half - 1 - np.arange(half))
    matrix = np.zeros((n, n))
    matrix[np.arange(n), source] = 1.0
    return make_isometry(layout, layout, matrix)


def _measure(state: PureState, c: float, m: int) -> float:
    """Probability of the accepting vector, measured by undoing the fan-out and the rotation."""
    state = apply_local(_uncopy(m), state)
    state = apply_local(verifier_rotation(c), state)
    measured = [ANSWER] + copy_labels(m)
    rest = [label for label in state.labels if label not in measured]
    rows = reorder(state, measured + rest).amplitudes.reshape(2 ** (m + 1), -1)
    return float(np.clip(np.vdot(rows[0], rows[0]).real, 0.0, 1.0))


def acceptance_formula(p: float, c: float, overlap: float) -> float:
    """``(1-c)(1-p) + cp + 2 sqrt(cp(1-c)(1-p)) <E'|E>``."""
    return (1 - c) * (1 - p) + c * p + 2 * math.sqrt(c * p * (1 - c) * (1 - p)) * overlap


def run_final_round(model: ProofSystemModel, N: int, backend: str = "dense") -> RoundOutcome:
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    if backend == "gram":
        overlap = gram.residual_overlap(N, 0.0, "backward")
        acceptance = acceptance_formula(model.p, model.c, overlap)
    elif backend == "dense":
        copied = pseudo_copy(model.final_state, ANSWER, model.m)
        resource = build_resource(model.phi0, model.phi1, N)
        exchanged = controlled_exchange(copied, resource, copy_labels(model.m), direction="backward")
        acceptance = _measure(exchanged, model.c, model.m)
    else:
        raise BackendUnsupported(f"Unknown backend: {backend}")
    logger.debug(f"Final round p={model.p} c={model.c} N={N} m={model.m} {backend}: {acceptance!r}")
    return RoundOutcome(acceptance_probability=acceptance, N=N, m=model.m, backend=backend)


def yes_acceptance_formula(c: float, N: int) -> float:
    """Acceptance with p = c: ``1 - 2c(1-c)/N``."""
    _check_probability("c", c)
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    return 1.0 - 2.0 * c * (1.0 - c) / N


def no_case_ceiling(c: float, s: float) -> Tuple[float, float]:
    """Return ``((sqrt(sc) + sqrt((1-s)(1-c)))^2, 1 - (c-s)^2)``."""
    _check_probability("c", c)
    _check_probability("s", s)
    if s > c:
        raise DomainError(f"Soundness {s} exceeds completeness {c}")
    ceiling = (math.sqrt(s * c) + math.sqrt((1 - s) * (1 - c))) ** 2
    cap = 1.0 - (c - s) ** 2
    if ceiling > cap + CEILING_TOL:
        raise BoundViolation(f"No-case ceiling {ceiling!r} exceeds {cap!r}")
    return ceiling, cap


def no_case_sweep(
    c: float,
    s: float,
    N: int,
    m: int = 2,
    points: int = 5,
    backend: str = "dense",
    workers: int = 1,
) -> List[Tuple[float, float]]:
    """Acceptance of honest-style provers at ``p`` in ``[0, s]``; each must respect the ceiling."""
    ceiling, _ = no_case_ceiling(c, s)
    grid = [float(p) for p in np.linspace(0.0, s, points)]

    def accept(p: float) -> float:
        return run_final_round(make_model(p, c, s, m), N, backend).acceptance_probability

    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(accept, grid))
    for p, value in zip(grid, values):
        if value > ceiling + SWEEP_TOL:
            raise BoundViolation(f"Acceptance {value!r} at p={p} exceeds the no-case ceiling {ceiling!r}")
    return list(zip(grid, values))
