"""Dense state vectors over registers of mixed-dimension subsystems.

Index convention: amplitudes are stored row-major over the register, the
first subsystem being the most significant digit.  For an atom the level
order is ``ATOM_LEVELS = ("f", "e", "g")``, so ``f`` is index 0 and the
logical encoding f -> 0, {e, g} -> 1 coincides with the index order of
each atom's working level pair.

States are treated as immutable: every operation returns a new
:class:`StateVector`.  Global phases are kept.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolation,
    InvalidInputError,
    MeasurementBasisUndefined,
)

ATOM_LEVELS = ("f", "e", "g")

UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
SCHMIDT_TOL = 1e-8
LEAK_TOL = 1e-10


class Kind(enum.Enum):
    ATOM = "atom"
    CAVITY = "cavity"
    QUBIT = "qubit"


@dataclass(frozen=True)
class SubsystemSpec:
    """One tensor factor of a register.

    ``levels`` names the basis states when they have names: the three atomic
    levels for a full atom, or the two atomic levels a logical qubit is
    encoded in once an atom has been restricted to its working pair.
    """

    label: Hashable
    kind: Kind
    dim: int
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidInputError(f"subsystem {self.label!r}: dim must be >= 2")
        if self.levels is not None and len(self.levels) != self.dim:
            raise InvalidInputError(f"subsystem {self.label!r}: levels/dim mismatch")
        if self.kind is Kind.ATOM and self.dim != 3:
            raise InvalidInputError(f"atom {self.label!r} must have dim 3")

    def index(self, level) -> int:
        """Basis index of ``level`` (a level name or an integer)."""
        if isinstance(level, str):
            if self.levels is None or level not in self.levels:
                raise InvalidInputError(f"{self.label!r} has no level {level!r}")
            return self.levels.index(level)
        level = int(level)
        if not 0 <= level < self.dim:
            raise InvalidInputError(f"level {level} out of range for {self.label!r}")
        return level

    @property
    def is_atomic(self) -> bool:
        """True for full atoms and for qubits encoded in atomic levels."""
        return self.levels is not None and set(self.levels) <= set(ATOM_LEVELS)


def atom(label) -> SubsystemSpec:
    return SubsystemSpec(label, Kind.ATOM, 3, ATOM_LEVELS)


def cavity(label, n_max: int = 1) -> SubsystemSpec:
    return SubsystemSpec(label, Kind.CAVITY, n_max + 1)


def qubit(label, levels: tuple[str, str] | None = None) -> SubsystemSpec:
    return SubsystemSpec(label, Kind.QUBIT, 2, levels)


@dataclass(frozen=True, eq=False)
class StateVector:
    register: tuple[SubsystemSpec, ...]
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        register = tuple(self.register)
        object.__setattr__(self, "register", register)
        labels = [s.label for s in register]
        if len(set(labels)) != len(labels):
            raise InvalidInputError("register labels must be unique")
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != math.prod(s.dim for s in register):
            raise InvalidInputError("amplitude count does not match register dims")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.register)

    @property
    def labels(self) -> list:
        return [s.label for s in self.register]

    def axis(self, label) -> int:
        for i, s in enumerate(self.register):
            if s.label == label:
                return i
        raise InvalidInputError(f"unknown subsystem {label!r}")

    def spec(self, label) -> SubsystemSpec:
        return self.register[self.axis(label)]

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims) if self.register else self.amps.reshape(())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def amplitude(self, levels: Sequence) -> complex:
        idx = tuple(s.index(l) for s, l in zip(self.register, levels, strict=True))
        return complex(self.tensor()[idx])

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise ContractViolation(f"state norm {self.norm():.3e} deviates from 1")


def empty_state() -> StateVector:
    """The scalar 1: a register with no subsystems."""
    return StateVector((), np.ones(1, dtype=complex))


def new_product_state(specs: Sequence[SubsystemSpec], initial_levels: Sequence) -> StateVector:
    """Basis product state; levels may be names (``"f"``) or indices."""
    if len(specs) != len(initial_levels):
        raise InvalidInputError("need exactly one initial level per subsystem")
    amps = np.ones(1, dtype=complex)
    for spec, level in zip(specs, initial_levels):
        vec = np.zeros(spec.dim, dtype=complex)
        vec[spec.index(level)] = 1.0
        amps = np.kron(amps, vec)
    return StateVector(tuple(specs), amps)


def from_vectors(specs: Sequence[SubsystemSpec], vectors: Sequence[Sequence[complex]]) -> StateVector:
    """Product of arbitrary single-subsystem vectors (normalized per factor)."""
    amps = np.ones(1, dtype=complex)
    for spec, vec in zip(specs, vectors, strict=True):
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (spec.dim,):
            raise InvalidInputError(f"vector for {spec.label!r} has wrong length")
        amps = np.kron(amps, vec / np.linalg.norm(vec))
    return StateVector(tuple(specs), amps)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(a.register + b.register, np.kron(a.amps, b.amps))


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0
    )


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Square matrix acting on an ordered subset of register labels.

    ``kraus=True`` marks a noise element that is allowed to be non-unitary.
    """

    targets: tuple
    matrix: np.ndarray
    kraus: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError("operator matrix must be square")
        if not self.kraus and not is_unitary(m):
            raise ContractViolation("operator matrix is not unitary")
        object.__setattr__(self, "matrix", m)


def apply_matrix(state: StateVector, targets: Sequence, matrix: np.ndarray) -> StateVector:
    """Apply ``matrix`` to ``targets`` without any unitarity check."""
    axes = [state.axis(t) for t in targets]
    if len(set(axes)) != len(axes):
        raise InvalidInputError("repeated target")
    tdims = [state.dims[a] for a in axes]
    size = math.prod(tdims)
    if matrix.shape != (size, size):
        raise InvalidInputError(
            f"matrix shape {matrix.shape} does not match target dims {tdims}"
        )
    psi = np.moveaxis(state.tensor(), axes, range(len(axes)))
    shape = psi.shape
    out = (matrix @ psi.reshape(size, -1)).reshape(shape)
    out = np.moveaxis(out, range(len(axes)), axes)
    return StateVector(state.register, out.reshape(-1))


def apply_unitary(state: StateVector, op: LocalOperator) -> StateVector:
    if op.kraus:
        raise ContractViolation("Kraus elements go through apply_kraus")
    return apply_matrix(state, op.targets, op.matrix)


def apply_kraus(state: StateVector, op: LocalOperator) -> tuple[float, StateVector]:
    """Apply a Kraus element; return (branch probability, renormalized state)."""
    out = apply_matrix(state, op.targets, op.matrix)
    p = out.norm() ** 2
    if p <= 0.0:
        return 0.0, out
    return p, StateVector(out.register, out.amps / math.sqrt(p))


def level_projector(state: StateVector, label, levels: Iterable) -> np.ndarray:
    spec = state.spec(label)
    diag = np.zeros(spec.dim)
    for lv in levels:
        diag[spec.index(lv)] = 1.0
    return np.diag(diag)


def weight_on(state: StateVector, label, levels: Iterable) -> float:
    """Total probability that ``label`` is found in one of ``levels``."""
    spec = state.spec(label)
    idx = [spec.index(lv) for lv in levels]
    t = np.moveaxis(state.tensor(), state.axis(label), 0)
    return float(np.sum(np.abs(t[idx]) ** 2))


# --- measurement ---------------------------------------------------------------


class BasisKind(enum.Enum):
    Z = "Z"
    X = "X"
    Y = "Y"
    B = "B"


@dataclass(frozen=True)
class MeasurementBasis:
    """Single-qubit measurement basis.

    ``B`` is the equatorial basis {(|0> +- e^{i alpha}|1>)/sqrt2}; ``X`` and
    ``Y`` are its alpha = 0 and alpha = pi/2 members.  ``level_pair`` names
    the two atomic levels playing |0> and |1> when the target is an atom.
    """

    kind: BasisKind = BasisKind.B
    alpha: float = 0.0
    level_pair: tuple | None = None

    @classmethod
    def x(cls, level_pair=None):
        return cls(BasisKind.X, 0.0, level_pair)

    @classmethod
    def y(cls, level_pair=None):
        return cls(BasisKind.Y, math.pi / 2, level_pair)

    @classmethod
    def z(cls, level_pair=None):
        return cls(BasisKind.Z, 0.0, level_pair)

    @classmethod
    def b(cls, alpha: float, level_pair=None):
        return cls(BasisKind.B, float(alpha), level_pair)

    @property
    def angle(self) -> float:
        if self.kind is BasisKind.X:
            return 0.0
        if self.kind is BasisKind.Y:
            return math.pi / 2
        return self.alpha

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(+1 eigenvector, -1 eigenvector) in the two-level space."""
        if self.kind is BasisKind.Z:
            return np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
        ph = np.exp(1j * self.angle)
        s = 1 / math.sqrt(2)
        return np.array([s, s * ph]), np.array([s, -s * ph])


def _pair_indices(spec: SubsystemSpec, basis: MeasurementBasis) -> tuple[int, int]:
    if basis.level_pair is not None:
        return spec.index(basis.level_pair[0]), spec.index(basis.level_pair[1])
    if spec.dim != 2:
        raise MeasurementBasisUndefined(
            f"{spec.label!r} has dim {spec.dim}; a level_pair is required"
        )
    return 0, 1


def _outcome_vector(state: StateVector, target, basis: MeasurementBasis, outcome: int) -> np.ndarray:
    spec = state.spec(target)
    i0, i1 = _pair_indices(spec, basis)
    others = [k for k in range(spec.dim) if k not in (i0, i1)]
    if others and weight_on(state, target, others) > LEAK_TOL:
        raise MeasurementBasisUndefined(
            f"{target!r} carries amplitude outside the level pair {basis.level_pair}"
        )
    plus, minus = basis.vectors()
    v2 = plus if outcome == +1 else minus
    vec = np.zeros(spec.dim, dtype=complex)
    vec[i0], vec[i1] = v2
    return vec


def project(state: StateVector, target, basis: MeasurementBasis, outcome: int) -> tuple[float, StateVector]:
    """Project onto one outcome; returns (Born probability, normalized state).

    The measured subsystem is left in the outcome eigenvector.
    """
    if outcome not in (+1, -1):
        raise InvalidInputError("outcome must be +1 or -1")
    vec = _outcome_vector(state, target, basis, outcome)
    out = apply_matrix(state, [target], np.outer(vec, vec.conj()))
    p = out.norm() ** 2
    if p <= 1e-300:
        return 0.0, out
    return p, StateVector(out.register, out.amps / math.sqrt(p))


def outcome_probabilities(state: StateVector, target, basis: MeasurementBasis) -> tuple[float, float]:
    ax = state.axis(target)
    t = np.moveaxis(state.tensor(), ax, 0).reshape(state.dims[ax], -1)
    probs = []
    for outcome in (+1, -1):
        vec = _outcome_vector(state, target, basis, outcome)
        probs.append(float(np.sum(np.abs(vec.conj() @ t) ** 2)))
    return probs[0], probs[1]


def measure(state: StateVector, target, basis: MeasurementBasis, rng: np.random.Generator):
    """Sample a projective measurement.

    Returns ``(outcome, prob, collapsed)`` with outcome +1 or -1 and prob the
    Born probability of the sampled outcome.
    """
    p_plus, _ = outcome_probabilities(state, target, basis)
    outcome = +1 if rng.random() < p_plus else -1
    prob, collapsed = project(state, target, basis, outcome)
    return outcome, prob, collapsed


# --- register surgery --------------------------------------------------------


def remove(state: StateVector, target, level=None, tol: float = SCHMIDT_TOL) -> StateVector:
    """Drop a subsystem that is in a product state with the rest.

    With ``level`` given the subsystem must sit in that basis state and the
    remaining amplitudes are kept verbatim (phase included).  Otherwise the
    factor is split off by SVD and its phase absorbed into the remainder.
    """
    ax = state.axis(target)
    spec = state.register[ax]
    mat = np.moveaxis(state.tensor(), ax, 0).reshape(spec.dim, -1)
    rest = state.register[:ax] + state.register[ax + 1:]
    if level is not None:
        k = spec.index(level)
        kept = mat[k]
        if abs(np.linalg.norm(kept) - state.norm()) > tol:
            raise ContractViolation(f"{target!r} is not in level {level!r}")
        return StateVector(rest, kept)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if np.count_nonzero(s > tol) > 1:
        raise ContractViolation(f"{target!r} is entangled with the rest of the register")
    kept = s[0] * vh[0]
    # fix the residual phase so the largest factor component is real positive
    k = int(np.argmax(np.abs(u[:, 0])))
    kept = kept * (u[k, 0] / abs(u[k, 0]))
    return StateVector(rest, kept)


def restrict(state: StateVector, label, levels: Sequence[str], tol: float = LEAK_TOL) -> StateVector:
    """Re-encode a subsystem on a subset of its named levels.

    Used to shrink a 3-level atom to the qubit spanned by its working pair.
    Raises if the discarded levels carry more than ``tol`` probability.
    """
    ax = state.axis(label)
    spec = state.register[ax]
    keep = [spec.index(lv) for lv in levels]
    drop = [k for k in range(spec.dim) if k not in keep]
    if drop and weight_on(state, label, drop) > tol:
        raise MeasurementBasisUndefined(f"{label!r} has weight outside {tuple(levels)}")
    t = np.take(state.tensor(), keep, axis=ax)
    new = SubsystemSpec(spec.label, Kind.QUBIT if len(keep) == 2 else spec.kind,
                        len(keep), tuple(spec.levels[k] for k in keep))
    reg = state.register[:ax] + (new,) + state.register[ax + 1:]
    amps = t.reshape(-1)
    n = np.linalg.norm(amps)
    return StateVector(reg, amps / n if n > 0 else amps)


def embed_atom(state: StateVector, label) -> StateVector:
    """Inverse of :func:`restrict` for atoms: back to all three levels."""
    ax = state.axis(label)
    spec = state.register[ax]
    if spec.kind is Kind.ATOM:
        return state
    if not spec.is_atomic:
        raise InvalidInputError(f"{label!r} is not an atomic subsystem")
    t = np.moveaxis(state.tensor(), ax, 0)
    full = np.zeros((3,) + t.shape[1:], dtype=complex)
    for k, lv in enumerate(spec.levels):
        full[ATOM_LEVELS.index(lv)] = t[k]
    full = np.moveaxis(full, 0, ax)
    reg = state.register[:ax] + (atom(label),) + state.register[ax + 1:]
    return StateVector(reg, full.reshape(-1))


def embed_all_atoms(state: StateVector) -> StateVector:
    for s in state.register:
        if s.kind is Kind.QUBIT and s.is_atomic:
            state = embed_atom(state, s.label)
    return state


def permute(state: StateVector, labels: Sequence) -> StateVector:
    """Reorder the register to ``labels``."""
    axes = [state.axis(l) for l in labels]
    if sorted(axes) != list(range(len(state.register))):
        raise InvalidInputError("permutation must name every subsystem once")
    t = np.transpose(state.tensor(), axes)
    return StateVector(tuple(state.register[a] for a in axes), t.reshape(-1))


# --- comparisons -------------------------------------------------------------


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for states on identical registers."""
    if a.register != b.register:
        raise InvalidInputError("fidelity needs identical registers")
    return float(min(1.0, abs(np.vdot(a.amps, b.amps)) ** 2))


def schmidt_rank(state: StateVector, cut: Iterable, tol: float = SCHMIDT_TOL) -> int:
    cut = list(cut)
    if not cut or len(set(cut)) >= len(state.register):
        raise InvalidInputError("cut must be a nonempty proper subset of the register")
    axes = [state.axis(l) for l in cut]
    rest = [k for k in range(len(state.register)) if k not in axes]
    rows = math.prod(state.dims[a] for a in axes)
    mat = np.transpose(state.tensor(), axes + rest).reshape(rows, -1)
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.count_nonzero(s > tol))
