"""Cavity-QED gate set of the crossed-beam chip.

Conventions (all fixed, all exercised by the tests):

* ``f`` is the upper level of the e <-> f maser transition, so an atom in
  ``f`` emits into an empty resonant cavity.
* ``resonant_exchange(theta)`` rotates each pair {|f,n>, |e,n+1>} by the
  pulse area ``theta * sqrt(n+1)``: ``theta = pi/2`` is an equal split,
  ``theta = pi`` a full transfer.  The map is
  ``cos(a/2) 1 - i sin(a/2) sigma_x`` on the pair.
* The Jaynes-Cummings ``-i`` is removed by fixed diagonal frame phases
  (:func:`frame_phase`), so the memory states come out with the real
  amplitudes used throughout.
* The collision gate is the exact two-atom map of the dispersive regime,
  identity on every level combination outside the {e f, f e} exchange
  block and the shifted |e g> state.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import core
from .core import Kind, StateVector
from .errors import InvalidInputError, TruncationError, UnsupportedRegimeError

_F, _E, _G = (core.ATOM_LEVELS.index(x) for x in ("f", "e", "g"))


@dataclass(frozen=True)
class InteractionParams:
    """Dispersive coupling: ``omega`` (rad/s), ``delta`` (rad/s), ``t`` (s)."""

    omega: float
    delta: float
    t: float

    def __post_init__(self):
        if self.delta < 10 * self.omega:
            raise InvalidInputError("dispersive mode needs delta >= 10 * omega")
        if self.t < 0:
            raise InvalidInputError("interaction time must be non-negative")

    @property
    def lam(self) -> float:
        return self.omega**2 / self.delta

    @property
    def lambda_t(self) -> float:
        return self.lam * self.t

    @classmethod
    def cphase(cls, omega: float, delta: float) -> "InteractionParams":
        """Parameters whose interaction time gives lambda*t = pi."""
        return cls(omega, delta, math.pi * delta / omega**2)


@dataclass(frozen=True)
class RamseyPulse:
    """Classical-field rotation on two atomic levels.

    The matrix on ``level_pair`` (first level as |0>) is
    ``exp(-i theta/2 (cos(phi) X + sin(phi) Y)) @ diag(1, e^{i pre_phase})``;
    ``pre_phase`` is a frame phase set by the zone's timing.  The third
    level is left alone.
    """

    level_pair: tuple[str, str]
    theta: float
    phi: float = 0.0
    pre_phase: float = 0.0

    @classmethod
    def hadamard(cls, level_pair=("f", "g"), area_scale: float = 1.0) -> "RamseyPulse":
        # H = R_y(pi/2) Z exactly
        return cls(tuple(level_pair), area_scale * math.pi / 2, math.pi / 2, math.pi)

    @classmethod
    def pi_pulse(cls, level_pair=("f", "e"), area_scale: float = 1.0) -> "RamseyPulse":
        return cls(tuple(level_pair), area_scale * math.pi, 0.0)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        n = math.cos(self.phi) - 1j * math.sin(self.phi)
        rot = np.array([[c, -1j * s * n], [-1j * s * np.conj(n), c]])
        return rot @ np.diag([1.0, np.exp(1j * self.pre_phase)])


def _require_atomic(state: StateVector, label) -> core.SubsystemSpec:
    spec = state.spec(label)
    if not spec.is_atomic:
        raise InvalidInputError(f"{label!r} is not an atom")
    return spec


def _pair_matrix(spec: core.SubsystemSpec, pair, m2: np.ndarray) -> np.ndarray:
    """Lift a 2x2 matrix on ``pair`` to the subsystem's full dimension."""
    i, j = spec.index(pair[0]), spec.index(pair[1])
    full = np.eye(spec.dim, dtype=complex)
    full[np.ix_([i, j], [i, j])] = m2
    return full


def ramsey_rotate(state: StateVector, atom, pulse: RamseyPulse) -> StateVector:
    spec = _require_atomic(state, atom)
    return core.apply_matrix(state, [atom], _pair_matrix(spec, pulse.level_pair, pulse.matrix()))


def frame_phase(state: StateVector, atom, phases: Mapping[str, complex]) -> StateVector:
    """Multiply the named levels of ``atom`` by fixed unit phases."""
    spec = _require_atomic(state, atom)
    diag = np.ones(spec.dim, dtype=complex)
    for level, ph in phases.items():
        if abs(abs(ph) - 1) > 1e-12:
            raise InvalidInputError("frame phases must have modulus 1")
        diag[spec.index(level)] = ph
    return core.apply_matrix(state, [atom], np.diag(diag))


# --- two-atom dispersive collision -------------------------------------------


def collision_unitary(lambda_t: float) -> np.ndarray:
    """9x9 map on (atom1, atom2), both in full (f, e, g) level order."""
    u = np.eye(9, dtype=complex)
    ef, fe, eg = 3 * _E + _F, 3 * _F + _E, 3 * _E + _G
    ph = np.exp(-1j * lambda_t)
    c, s = math.cos(lambda_t), math.sin(lambda_t)
    u[ef, ef] = ph * c
    u[fe, ef] = -1j * ph * s
    u[ef, fe] = -1j * ph * s
    u[fe, fe] = ph * c
    u[eg, eg] = ph
    return u


def collision_hamiltonian() -> np.ndarray:
    """Effective Hamiltonian (units of lambda) generating :func:`collision_unitary`."""
    h = np.zeros((9, 9), dtype=complex)
    ef, fe, eg = 3 * _E + _F, 3 * _F + _E, 3 * _E + _G
    h[np.ix_([ef, fe], [ef, fe])] = [[1, 1], [1, 1]]
    h[eg, eg] = 1
    return h


def _with_full_atoms(state: StateVector, atoms) -> StateVector:
    for a in atoms:
        _require_atomic(state, a)
        state = core.embed_atom(state, a)
    return state


def _restore(state: StateVector, original: StateVector, atoms) -> StateVector:
    """Shrink atoms back to their original encoding when no weight leaked."""
    for a in atoms:
        spec = original.spec(a)
        if spec.kind is Kind.QUBIT:
            other = [lv for lv in core.ATOM_LEVELS if lv not in spec.levels]
            if core.weight_on(state, a, other) <= core.LEAK_TOL:
                state = core.restrict(state, a, spec.levels)
    return state


def dispersive_collision(state: StateVector, atom1, atom2, lambda_t: float) -> StateVector:
    """Exact dispersive two-atom collision with coupling phase ``lambda_t``.

    At ``lambda_t = pi`` this is CZ on the encoding atom1: f->0, e->1 and
    atom2: f->0, g->1.
    """
    if lambda_t < 0:
        raise InvalidInputError("lambda_t must be non-negative")
    full = _with_full_atoms(state, (atom1, atom2))
    out = core.apply_matrix(full, [atom1, atom2], collision_unitary(lambda_t))
    return _restore(out, state, (atom1, atom2))


def dispersive_collision_physical(state: StateVector, atom1, atom2, lambda_t: float) -> StateVector:
    """Same collision obtained by exponentiating the effective Hamiltonian."""
    if lambda_t < 0:
        raise InvalidInputError("lambda_t must be non-negative")
    full = _with_full_atoms(state, (atom1, atom2))
    u = expm(-1j * lambda_t * collision_hamiltonian())
    out = core.apply_matrix(full, [atom1, atom2], u)
    return _restore(out, state, (atom1, atom2))


# --- atom-cavity --------------------------------------------------------------


def exchange_matrix(n_max: int, theta: float, upper: str = "f", lower: str = "e") -> np.ndarray:
    """Resonant exchange on (atom, cavity) with the atom in full level order."""
    d = n_max + 1
    u = np.eye(3 * d, dtype=complex)
    up, lo = core.ATOM_LEVELS.index(upper), core.ATOM_LEVELS.index(lower)
    for n in range(n_max):
        a = theta * math.sqrt(n + 1)
        i, j = up * d + n, lo * d + n + 1
        c, s = math.cos(a / 2), math.sin(a / 2)
        u[i, i] = u[j, j] = c
        u[i, j] = u[j, i] = -1j * s
    return u


def resonant_exchange(state: StateVector, atom, cav, theta: float,
                      upper: str = "f", lower: str = "e") -> StateVector:
    """Vacuum-Rabi exchange between ``atom`` and ``cav`` with pulse area ``theta``."""
    cspec = state.spec(cav)
    if cspec.kind is not Kind.CAVITY:
        raise InvalidInputError(f"{cav!r} is not a cavity")
    n_max = cspec.dim - 1
    if n_max < 1:
        raise InvalidInputError("cavity needs n_max >= 1")
    original = state
    state = _with_full_atoms(state, (atom,))
    # |upper, n_max> would couple to |lower, n_max+1>, which is not represented
    if abs(math.sin(theta * math.sqrt(n_max + 1) / 2)) > 1e-12:
        t = state.tensor()
        ax_a, ax_c = state.axis(atom), state.axis(cav)
        top = np.moveaxis(t, (ax_a, ax_c), (0, 1))[core.ATOM_LEVELS.index(upper), n_max]
        if np.sum(np.abs(top) ** 2) > core.LEAK_TOL:
            raise TruncationError(f"exchange would exceed the Fock cutoff n_max={n_max}")
    out = core.apply_matrix(state, [atom, cav], exchange_matrix(n_max, theta, upper, lower))
    return _restore(out, original, (atom,))


def cavity_conditioned_phase(state: StateVector, atom, cav, phase: float = math.pi) -> StateVector:
    """Phase ``e^{i phase}`` on |g>|1>_C (default -1), identity elsewhere."""
    cspec = state.spec(cav)
    if cspec.kind is not Kind.CAVITY:
        raise InvalidInputError(f"{cav!r} is not a cavity")
    if cspec.dim > 2 and core.weight_on(state, cav, range(2, cspec.dim)) > core.LEAK_TOL:
        raise UnsupportedRegimeError("conditioned phase is only modelled on Fock {0, 1}")
    spec = _require_atomic(state, atom)
    if "g" not in spec.levels:
        return state
    diag = np.ones(spec.dim * cspec.dim, dtype=complex)
    diag[spec.index("g") * cspec.dim + 1] = np.exp(1j * phase)
    return core.apply_matrix(state, [atom, cav], np.diag(diag))


# --- the three-atom memory protocol ------------------------------------------

A1_FRAME = {"e": 1j}
A3_FRAME = {"f": -1.0, "e": -1j}


def memory_pulse(state: StateVector, atoms, cav, *, area_scales=(1.0, 1.0, 1.0),
                 ramsey_scales=(1.0, 1.0, 1.0), decay=None) -> StateVector:
    """Run the emission / non-demolition / absorption sequence on a register.

    ``atoms`` are three labels already present in ``f``; ``cav`` is an empty
    cavity.  Steps:

    1. A1: pi/2 exchange, then frame phase e -> i e.
    2. A2: Hadamard on (f, g), then the photon-conditioned pi phase.
    3. A3: pi pulse f<->e, pi exchange (absorption), pi pulse back, then
       frame phases f -> -f, e -> -i e.

    ``area_scales`` scale the three cavity interactions (velocity errors),
    ``ramsey_scales`` the classical pulses of A2 and A3 (index 0 unused
    unless a Ramsey zone acts on A1).  ``decay``, if given, is called as
    ``decay(state, cav)`` between successive atoms.
    """
    a1, a2, a3 = atoms
    state = resonant_exchange(state, a1, cav, area_scales[0] * math.pi / 2)
    state = frame_phase(state, a1, A1_FRAME)
    if decay is not None:
        state = decay(state, cav)
    state = ramsey_rotate(state, a2, RamseyPulse.hadamard(("f", "g"), ramsey_scales[1]))
    state = cavity_conditioned_phase(state, a2, cav, area_scales[1] * math.pi)
    if decay is not None:
        state = decay(state, cav)
    state = ramsey_rotate(state, a3, RamseyPulse.pi_pulse(("f", "e"), ramsey_scales[2]))
    state = resonant_exchange(state, a3, cav, area_scales[2] * math.pi)
    state = ramsey_rotate(state, a3, RamseyPulse.pi_pulse(("f", "e"), ramsey_scales[2]))
    return frame_phase(state, a3, A3_FRAME)


def psi3_reference(labels=("A1", "A2", "A3")) -> StateVector:
    """(|fff> + |fgf> + |efe> - |ege>)/2 written out directly."""
    reg = tuple(core.atom(l) for l in labels)
    t = np.zeros((3, 3, 3), dtype=complex)
    t[_F, _F, _F] = t[_F, _G, _F] = t[_E, _F, _E] = 0.5
    t[_E, _G, _E] = -0.5
    return StateVector(reg, t.reshape(-1))


def ghz_sequence(labels=("A1", "A2", "A3"), cavity_label="C", *, return_with_cavity=False):
    """Three atoms through one memory cavity; returns the atoms-only state.

    The cavity is checked to be disentangled (Schmidt rank 1) and in vacuum
    before it is dropped.  ``return_with_cavity=True`` also returns the state
    just before removal.
    """
    reg = [core.atom(l) for l in labels] + [core.cavity(cavity_label)]
    state = core.new_product_state(reg, ["f", "f", "f", 0])
    state = memory_pulse(state, labels, cavity_label)
    if core.schmidt_rank(state, [cavity_label]) != 1:
        raise UnsupportedRegimeError("cavity still entangled after absorption")
    atoms_only = core.remove(state, cavity_label, level=0)
    return (atoms_only, state) if return_with_cavity else atoms_only


GHZ_LOCAL_PAIRS = (("f", "e"), ("f", "g"), ("f", "e"))


def to_graph_frame(state: StateVector, atoms, pairs=GHZ_LOCAL_PAIRS, area_scales=None) -> StateVector:
    """Hadamard on each atom's working pair.

    Maps the memory output to the path graph state A1 - A2 - A3 under the
    encoding f -> 0, {e, g} -> 1.
    """
    scales = area_scales if area_scales is not None else [1.0] * len(atoms)
    for a, pair, sc in zip(atoms, pairs, scales, strict=True):
        state = ramsey_rotate(state, a, RamseyPulse.hadamard(pair, sc))
    return state


def logical_view(state: StateVector, pairs: Mapping) -> StateVector:
    """Restrict each listed atom to its pair so the register is all qubits."""
    for label, pair in pairs.items():
        state = core.restrict(state, label, pair)
    return state


def to_ghz_frame(state: StateVector, atoms) -> StateVector:
    """Hadamard on the middle atom's (f, g) pair.

    Takes the memory output to (|fff> + |ege>)/sqrt2, i.e. (|000> + |111>)/sqrt2
    under f -> 0, {e, g} -> 1.
    """
    return ramsey_rotate(state, atoms[1], RamseyPulse.hadamard(("f", "g")))
