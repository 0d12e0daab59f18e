"""
Universal embezzling families built from a net of target states.

The family holds one exchange resource per net point, each exchanging
``|0^m>`` for that point. Embezzling a target picks the nearest net point and
runs only that component's exchange; the other components are untouched.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import BoundViolation, DomainError, LayoutMismatch
from ..utils.logger import logger
from . import epsilon_net
from .exchange import (
    ExchangeOutcome,
    ExchangeResource,
    IDENTICAL_TOL,
    build_resource,
    exchange,
    phase_only_outcome,
)
from .statevec import PureState, SubsystemLayout, basis_state

GUARANTEE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EmbezzlingFamily:
    layout: SubsystemLayout
    points: np.ndarray
    N: int
    epsilon: float
    covering_radius: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def phi(self) -> PureState:
        return basis_state(self.layout, [0] * len(self.layout))

    def state(self, index: int) -> PureState:
        return PureState(self.layout, self.points[index])

    def resource(self, index: int) -> ExchangeResource:
        return build_resource(self.phi, self.state(index), self.N)


@dataclass(frozen=True, eq=False)
class EmbezzleOutcome(ExchangeOutcome):
    net_index: int = -1
    net_distance: float = 0.0
    fidelity: float = 0.0


def universal_family(
    m: int,
    per_party_dims: Union[int, Sequence[int]],
    N: int,
    epsilon: float,
    probes: int = 512,
    seed: int = 0,
) -> EmbezzlingFamily:
    if m < 1 or N < 1:
        raise DomainError(f"Need m >= 1 and N >= 1, got m={m}, N={N}")
    dims = [per_party_dims] * m if isinstance(per_party_dims, int) else list(per_party_dims)
    if len(dims) != m:
        raise DomainError(f"Expected {m} party dimensions, got {len(dims)}")
    layout = SubsystemLayout(tuple((f"X{i}", dim) for i, dim in enumerate(dims, start=1)))
    points = epsilon_net.lattice_net(layout.total_dim, epsilon)
    radius = epsilon_net.measured_covering_radius(points, probes, seed)
    logger.info(
        f"Embezzling family m={m} dims={dims} N={N} eps={epsilon}: "
        f"{len(points)} points, measured covering radius {radius:.4f}"
    )
    return EmbezzlingFamily(layout=layout, points=points, N=N, epsilon=epsilon, covering_radius=radius)


def embezzle(family: EmbezzlingFamily, target: PureState, backend: str = "gram") -> EmbezzleOutcome:
    """Exchange ``|0^m>`` for the net point nearest ``target``.

    The reported fidelity is ``|<target|point>| * <E'_N|E_N>``, the overlap of
    the produced state with target and untouched resource.
    """
    if target.layout != family.layout:
        raise LayoutMismatch(f"Target layout {target.labels} does not match the family's {family.layout.labels}")
    index, closeness = epsilon_net.nearest_point(family.points, target.amplitudes)
    distance = epsilon_net.ray_distance(closeness)
    if distance > family.epsilon:
        logger.warning(f"Target is {distance:.4f} from the net, above eps={family.epsilon}")

    point = family.state(index)
    if abs(family.points[index][0]) >= 1.0 - IDENTICAL_TOL:
        outcome = phase_only_outcome(family.phi, point)
    else:
        outcome = exchange(family.phi, family.resource(index), "forward", backend)

    fidelity = closeness * outcome.residual_overlap
    if distance <= family.epsilon:
        floor = (1.0 - 1.0 / family.N) * (1.0 - family.epsilon ** 2 / 2.0)
        if fidelity < floor - GUARANTEE_TOL:
            raise BoundViolation(f"Embezzled fidelity {fidelity!r} below guarantee {floor!r}")
    return EmbezzleOutcome(
        output_state=outcome.output_state,
        residual_state=outcome.residual_state,
        residual_overlap=outcome.residual_overlap,
        backend=outcome.backend,
        direction=outcome.direction,
        net_index=index,
        net_distance=distance,
        fidelity=fidelity,
    )
