"""
Dense multipartite state kernel.

Amplitude vectors follow the leftmost-slowest convention: for a layout
``[("A", dA), ("B", dB)]`` the amplitude of ``|a>|b>`` is stored at index
``a * dB + b``. All values are immutable once built.
"""
import math
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from ..errors import (
    DimensionMismatch,
    LabelClash,
    LayoutMismatch,
    LengthMismatch,
    NotIsometry,
    NotNormalized,
    UnknownLabel,
)

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
ISOMETRY_TOL = 1e-12
ENTROPY_FLOOR = 1e-14


# ─── Layouts ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SubsystemLayout:
    subsystems: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        pairs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        labels = [label for label, _ in pairs]
        if len(set(labels)) != len(labels):
            raise LabelClash(f"Duplicate subsystem labels in {labels}")
        for label, dim in pairs:
            if dim < 1:
                raise DimensionMismatch(f"Subsystem {label} has dimension {dim}")
        object.__setattr__(self, "subsystems", pairs)

    @classmethod
    def of(cls, *pairs: Tuple[str, int]) -> "SubsystemLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.subsystems]

    @property
    def dims(self) -> List[int]:
        return [dim for _, dim in self.subsystems]

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.subsystems)

    def index(self, label: str) -> int:
        for i, (name, _) in enumerate(self.subsystems):
            if name == label:
                return i
        raise UnknownLabel(f"Unknown subsystem label: {label}")

    def dim(self, label: str) -> int:
        return self.subsystems[self.index(label)][1]

    def select(self, labels: Sequence[str]) -> "SubsystemLayout":
        return SubsystemLayout(tuple((label, self.dim(label)) for label in labels))

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LabelClash(f"Subsystem labels used twice: {sorted(clash)}")
        return SubsystemLayout(self.subsystems + other.subsystems)


# ─── Value types ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PureState:
    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise LengthMismatch(
                f"Expected {self.layout.total_dim} amplitudes, got {amps.size}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def labels(self) -> List[str]:
        return self.layout.labels

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise LengthMismatch(f"Expected a {n}x{n} matrix, got {mat.shape}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True, eq=False)
class LocalIsometry:
    input_layout: SubsystemLayout
    output_layout: SubsystemLayout
    matrix: np.ndarray

    @property
    def input_labels(self) -> List[str]:
        return self.input_layout.labels

    @property
    def output_labels(self) -> List[str]:
        return self.output_layout.labels


# ─── Constructors ─────────────────────────────────────────────────────────────

def make_state(layout: SubsystemLayout, amplitudes) -> PureState:
    """Validate and normalize an amplitude vector over ``layout``."""
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if amps.size != layout.total_dim:
        raise LengthMismatch(f"Expected {layout.total_dim} amplitudes, got {amps.size}")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(f"State norm is {norm:.12g}, expected 1")
    return PureState(layout, amps / norm)


def _renormalized(layout: SubsystemLayout, amps: np.ndarray) -> PureState:
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise NotNormalized("Zero vector cannot be a state")
    return PureState(layout, amps / norm)


def basis_state(layout: SubsystemLayout, digits: Sequence[int]) -> PureState:
    if len(digits) != len(layout):
        raise LengthMismatch(f"Expected {len(layout)} digits, got {len(digits)}")
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[np.ravel_multi_index(tuple(digits), layout.dims)] = 1.0
    return PureState(layout, amps)


def make_density(layout: SubsystemLayout, matrix) -> DensityOperator:
    mat = np.asarray(matrix, dtype=complex)
    n = layout.total_dim
    if mat.shape != (n, n):
        raise LengthMismatch(f"Expected a {n}x{n} matrix, got {mat.shape}")
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise NotNormalized("Density operator is not Hermitian")
    if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
        raise NotNormalized(f"Density operator has trace {np.trace(mat).real:.12g}")
    if np.min(np.linalg.eigvalsh(mat)) < -PSD_TOL:
        raise NotNormalized("Density operator has a negative eigenvalue")
    return DensityOperator(layout, mat)


def make_isometry(
    input_layout: SubsystemLayout,
    output_layout: SubsystemLayout,
    matrix,
    tol: float = ISOMETRY_TOL,
) -> LocalIsometry:
    mat = np.asarray(matrix, dtype=complex)
    shape = (output_layout.total_dim, input_layout.total_dim)
    if mat.shape != shape:
        raise DimensionMismatch(f"Isometry matrix has shape {mat.shape}, expected {shape}")
    if shape[0] < shape[1]:
        raise DimensionMismatch("Isometry output dimension is smaller than its input dimension")
    deviation = np.max(np.abs(mat.conj().T @ mat - np.eye(shape[1])), initial=0.0)
    if deviation > tol:
        raise NotIsometry(f"Matrix violates V*V = I by {deviation:.3g}")
    mat = mat.copy()
    mat.flags.writeable = False
    return LocalIsometry(input_layout, output_layout, mat)


def random_state(layout: SubsystemLayout, rng: np.random.Generator) -> PureState:
    """Haar-random pure state from a complex Gaussian vector."""
    n = layout.total_dim
    amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return _renormalized(layout, amps)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(dim, random_state=rng)


# ─── Combination and evolution ────────────────────────────────────────────────

def tensor(a: PureState, b: PureState) -> PureState:
    layout = a.layout.concat(b.layout)
    return PureState(layout, np.kron(a.amplitudes, b.amplitudes))


def inner(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.layout != b.layout:
        raise LayoutMismatch(f"Layouts differ: {a.layout.subsystems} vs {b.layout.subsystems}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def apply_local(op: LocalIsometry, state: PureState) -> PureState:
    """Apply ``op`` to its input subsystems, acting as the identity elsewhere.

    When the output layout equals the input layout the layout is unchanged;
    otherwise the output subsystems take the place of the earliest input
    subsystem and the remaining inputs disappear from the layout.
    """
    layout = state.layout
    for label, dim in op.input_layout.subsystems:
        if layout.dim(label) != dim:
            raise DimensionMismatch(
                f"Subsystem {label} has dimension {layout.dim(label)}, operator expects {dim}"
            )
    positions = [layout.index(label) for label in op.input_labels]
    rest = [i for i in range(len(layout)) if i not in positions]
    rest_layout = SubsystemLayout(tuple(layout.subsystems[i] for i in rest))

    moved = np.transpose(state.tensor_view(), positions + rest)
    moved = moved.reshape(op.input_layout.total_dim, rest_layout.total_dim)
    out = (op.matrix @ moved).reshape(op.output_layout.dims + rest_layout.dims)

    if op.output_layout == op.input_layout:
        out = np.transpose(out, np.argsort(positions + rest))
        return _renormalized(layout, out.reshape(-1))

    clash = set(op.output_labels) & set(rest_layout.labels)
    if clash:
        raise LabelClash(f"Operator outputs collide with untouched subsystems: {sorted(clash)}")
    n_out = len(op.output_layout)
    before = sum(1 for i in rest if i < min(positions))
    axes = (
        list(range(n_out, n_out + before))
        + list(range(n_out))
        + list(range(n_out + before, n_out + len(rest)))
    )
    out = np.transpose(out, axes)
    new_layout = SubsystemLayout(
        rest_layout.subsystems[:before]
        + op.output_layout.subsystems
        + rest_layout.subsystems[before:]
    )
    return _renormalized(new_layout, out.reshape(-1))


def cycle_permutation(labels: Sequence[str], direction: str = "forward") -> dict:
    """Register map for a cyclic shift of contents along ``labels``.

    Forward moves the content of ``labels[j]`` into ``labels[j+1]`` and the
    last content into ``labels[0]``; backward is the inverse.
    """
    labels = list(labels)
    n = len(labels)
    if direction == "forward":
        return {labels[j]: labels[(j + 1) % n] for j in range(n)}
    if direction == "backward":
        return {labels[j]: labels[(j - 1) % n] for j in range(n)}
    raise ValueError(f"Unknown shift direction: {direction}")


def _content_axes(layout: SubsystemLayout, permutation: Mapping[str, str]) -> List[int]:
    sources, targets = set(permutation), set(permutation.values())
    if sources != targets:
        raise LayoutMismatch("Register map is not a permutation of its labels")
    origin = {dst: src for src, dst in permutation.items()}
    for src, dst in permutation.items():
        if layout.dim(src) != layout.dim(dst):
            raise DimensionMismatch(
                f"Cannot move contents of {src} (dim {layout.dim(src)}) into {dst} (dim {layout.dim(dst)})"
            )
    return [layout.index(origin.get(label, label)) for label in layout.labels]


def permute_subsystems(state: PureState, permutation: Mapping[str, str]) -> PureState:
    """Move register contents: the content of ``src`` ends up in ``permutation[src]``.

    Labels not mentioned keep their content; the layout does not change.
    """
    axes = _content_axes(state.layout, permutation)
    moved = np.transpose(state.tensor_view(), axes)
    return PureState(state.layout, moved.reshape(-1))


def permutation_matrix(layout: SubsystemLayout, permutation: Mapping[str, str]) -> np.ndarray:
    """Unitary matrix of :func:`permute_subsystems` on ``layout``."""
    axes = _content_axes(layout, permutation)
    n = layout.total_dim
    source = np.transpose(np.arange(n).reshape(layout.dims), axes).reshape(-1)
    matrix = np.zeros((n, n))
    matrix[np.arange(n), source] = 1.0
    return matrix


def reorder(state: PureState, labels: Sequence[str]) -> PureState:
    """Transpose the layout itself; every subsystem keeps its content."""
    labels = list(labels)
    if sorted(labels) != sorted(state.labels):
        raise LayoutMismatch(f"{labels} is not a reordering of {state.labels}")
    axes = [state.layout.index(label) for label in labels]
    moved = np.transpose(state.tensor_view(), axes)
    return PureState(state.layout.select(labels), moved.reshape(-1))


def regroup(state: PureState, groups: Sequence[Tuple[str, Sequence[str]]]) -> PureState:
    """Merge consecutive subsystems into single ones, e.g. ``[("XA", ["S_1", "S_2"])]``.

    Every label of ``state`` must appear in exactly one group.
    """
    order = [label for _, members in groups for label in members]
    ordered = reorder(state, order)
    layout = SubsystemLayout(
        tuple((name, math.prod(state.layout.dim(m) for m in members)) for name, members in groups)
    )
    return PureState(layout, ordered.amplitudes)


# ─── Reduced states and measures ──────────────────────────────────────────────

def reduce(state: PureState, keep_labels: Sequence[str]) -> DensityOperator:
    keep_labels = list(keep_labels)
    if not keep_labels:
        raise UnknownLabel("At least one subsystem must be kept")
    keep = [state.layout.index(label) for label in keep_labels]
    rest = [i for i in range(len(state.layout)) if i not in keep]
    kept_layout = state.layout.select(keep_labels)
    mat = np.transpose(state.tensor_view(), keep + rest).reshape(kept_layout.total_dim, -1)
    rho = mat @ mat.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return make_density(kept_layout, rho / np.trace(rho).real)


def projector(state: PureState) -> DensityOperator:
    return DensityOperator(state.layout, np.outer(state.amplitudes, state.amplitudes.conj()))


def entropy(rho: DensityOperator) -> float:
    """Von Neumann entropy in bits."""
    eigenvalues = np.linalg.eigvalsh(rho.matrix)
    eigenvalues = eigenvalues[eigenvalues > ENTROPY_FLOOR]
    return max(0.0, float(-np.sum(eigenvalues * np.log2(eigenvalues))))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _check_same_layout(rho: DensityOperator, sigma: DensityOperator):
    if rho.layout != sigma.layout:
        raise LayoutMismatch(f"Layouts differ: {rho.layout.subsystems} vs {sigma.layout.subsystems}")


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Root fidelity ||sqrt(rho) sqrt(sigma)||_1."""
    _check_same_layout(rho, sigma)
    product = _psd_sqrt(rho.matrix) @ _psd_sqrt(sigma.matrix)
    return float(np.clip(np.sum(scipy.linalg.svdvals(product)), 0.0, 1.0))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Unnormalized trace norm ||rho - sigma||_1 (ranges over [0, 2])."""
    _check_same_layout(rho, sigma)
    return float(np.sum(scipy.linalg.svdvals(rho.matrix - sigma.matrix)))
