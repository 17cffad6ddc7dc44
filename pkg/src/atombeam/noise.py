"""Noise parameters, per-run perturbation sampling and closed-form budget terms."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import core, interactions
from .core import LocalOperator, StateVector
from .errors import InvalidInputError, SchemaError

NOISE_SCHEMA = 1
TRUNCATE_SIGMAS = 3.0


@dataclass(frozen=True)
class NoiseParams:
    """Physical imperfections of one run; defaults are the quoted chip values.

    velocity_sigma_frac
        relative spread of atomic velocities (sets pulse areas and overlaps)
    emission_jitter_sigma, transit_time
        single-atom source emission delay: mean ``transit_time``, std
        ``emission_jitter_sigma`` (s)
    t_cav, t_interaction, t_between_atoms
        memory-cavity field lifetime, collision overlap time, atom spacing (s)
    eta_detect, eta_ionize
        detector quantum and ionisation efficiencies (heralding)
    rotation_error_frac
        relative std of classical Ramsey pulse areas
    stray_dephasing_rate
        lumped stray-field phase diffusion per atom (1/s); 0 disables it
    """

    velocity_sigma_frac: float = 0.005
    emission_jitter_sigma: float = 1e-8
    transit_time: float = 1e-8
    t_cav: float = 1e-2
    t_interaction: float = 1e-6
    t_between_atoms: float = 1e-5
    eta_detect: float = 0.8
    eta_ionize: float = 0.98
    rotation_error_frac: float = 0.001
    stray_dephasing_rate: float = 0.0

    def __post_init__(self):
        for name in ("eta_detect", "eta_ionize"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        for name in ("t_cav", "t_interaction", "t_between_atoms"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("velocity_sigma_frac", "emission_jitter_sigma", "transit_time",
                     "rotation_error_frac", "stray_dephasing_rate"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")

    @classmethod
    def zero(cls) -> "NoiseParams":
        """Every spread zero, lifetime infinite, detectors perfect."""
        return cls(velocity_sigma_frac=0.0, emission_jitter_sigma=0.0, t_cav=math.inf,
                   eta_detect=1.0, eta_ionize=1.0, rotation_error_frac=0.0,
                   stray_dephasing_rate=0.0)

    def replace(self, **changes) -> "NoiseParams":
        return dataclasses.replace(self, **changes)

    @property
    def eta(self) -> float:
        return self.eta_detect * self.eta_ionize

    def to_dict(self) -> dict:
        d = {"schema_version": NOISE_SCHEMA, "kind": "noise"}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = "inf" if v == math.inf else v
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseParams":
        if data.get("kind") != "noise" or data.get("schema_version") != NOISE_SCHEMA:
            raise SchemaError("not a version-1 noise parameter document")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names - {"schema_version", "kind"}
        if unknown:
            raise SchemaError(f"unknown noise parameters: {sorted(unknown)}")
        kw = {k: float(v) for k, v in data.items() if k in names}
        return cls(**kw)


NOISE_PARAM_NAMES = tuple(f.name for f in dataclasses.fields(NoiseParams))


@dataclass(frozen=True)
class PhysicalRegime:
    n_principal: int
    q_factor: float
    frequency: float

    def __post_init__(self):
        if self.n_principal < 1 or self.q_factor <= 0 or self.frequency <= 0:
            raise InvalidInputError("need n >= 1, Q > 0, frequency > 0")

    @property
    def lifetime(self) -> float:
        return cavity_lifetime(self.q_factor, self.frequency)

    def coupling_relative_to(self, other: "PhysicalRegime") -> float:
        return coupling_scale(self.n_principal, other.n_principal)


def coherence_loss(t: float, t_cav: float) -> float:
    """Field coherence lost over ``t``: 1 - exp(-t / (2 t_cav))."""
    if t < 0 or t_cav <= 0:
        raise InvalidInputError("need t >= 0 and t_cav > 0")
    return -math.expm1(-t / (2 * t_cav))


def coupling_scale(n1: int, n2: int) -> float:
    """Relative atom-field coupling of principal numbers n1 vs n2 (n^4 law)."""
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("principal quantum numbers start at 1")
    return (n1 / n2) ** 4


def cavity_lifetime(q: float, frequency: float) -> float:
    """Energy decay time Q / (2 pi nu)."""
    if q <= 0 or frequency <= 0:
        raise InvalidInputError("Q and frequency must be positive")
    return q / (2 * math.pi * frequency)


# --- sampling ----------------------------------------------------------------


def truncated_normal(rng: np.random.Generator, n: int, cut: float = TRUNCATE_SIGMAS) -> np.ndarray:
    """Standard normals conditioned on |z| <= cut (rejection, seed-stable)."""
    z = rng.standard_normal(n)
    bad = np.abs(z) > cut
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > cut
    return z


@dataclass(frozen=True)
class AtomNoise:
    velocity_factor: float = 1.0
    emission_offset: float = 0.0
    ramsey_scale: float = 1.0
    stray_phase: float = 0.0

    @property
    def area_scale(self) -> float:
        """Pulse areas scale with transit time, i.e. inversely with velocity."""
        return 1.0 / self.velocity_factor


def sample_run_noise(params: NoiseParams, timeline, rng: np.random.Generator) -> dict:
    """Independent per-atom perturbations keyed by (beamline, cycle).

    ``timeline`` may be a :class:`~atombeam.chip.Timeline`, a list of keys
    or an atom count.  Velocity factor ~ N(1, sigma_v^2) and emission offset
    ~ N(transit, sigma_t^2), both truncated at 3 sigma.
    """
    if isinstance(timeline, int):
        keys = list(range(timeline))
    elif hasattr(timeline, "atoms"):
        keys = [(a.beamline, a.cycle) for a in timeline.atoms]
    else:
        keys = list(timeline)
    n = len(keys)
    zv = truncated_normal(rng, n)
    zt = truncated_normal(rng, n)
    zr = truncated_normal(rng, n)
    zp = rng.standard_normal(n)
    v = 1.0 + params.velocity_sigma_frac * zv
    off = params.transit_time + params.emission_jitter_sigma * zt
    rot = 1.0 + params.rotation_error_frac * zr
    ph = math.sqrt(2 * params.stray_dephasing_rate * params.t_between_atoms) * zp
    return {k: AtomNoise(float(v[i]), float(off[i]), float(rot[i]), float(ph[i]))
            for i, k in enumerate(keys)}


# --- channels ------------------------------------------------------------------


def cavity_decay(state: StateVector, cav, t: float, t_cav: float,
                 rng: np.random.Generator) -> tuple[StateVector, bool]:
    """One trajectory step of photon loss over time ``t`` (Fock {0, 1}).

    Jump operator sqrt(1 - e^{-t/t_cav}) a; otherwise the one-photon
    amplitude is damped by e^{-t/(2 t_cav)}.  Returns (state, jumped).
    """
    if t_cav == math.inf or t == 0:
        return state, False
    d = state.spec(cav).dim
    n = np.arange(d)
    k0 = np.diag(np.exp(-n * t / (2 * t_cav))).astype(complex)
    k1 = np.zeros((d, d), dtype=complex)
    for m in range(1, d):
        k1[m - 1, m] = math.sqrt(m * -math.expm1(-t / t_cav))
    p_jump, jumped = core.apply_kraus(state, LocalOperator((cav,), k1, kraus=True))
    if rng.random() < p_jump:
        return jumped, True
    _, kept = core.apply_kraus(state, LocalOperator((cav,), k0, kraus=True))
    return kept, False


def stray_dephase(state: StateVector, atom, phase: float) -> StateVector:
    """Relative phase ``phase`` on every level other than f."""
    if phase == 0.0:
        return state
    spec = state.spec(atom)
    return interactions.frame_phase(
        state, atom, {lv: np.exp(1j * phase) for lv in spec.levels if lv != "f"})


def collision_lambda_t(n1: AtomNoise, n2: AtomNoise, params: NoiseParams) -> float:
    """Coupling phase of a collision given both atoms' perturbations.

    Overlap shrinks by the relative arrival mismatch; the mean pulse-area
    scale of the two atoms stretches it.
    """
    m = arrival_mismatch(n1, n2, params)
    return math.pi * 0.5 * (n1.area_scale + n2.area_scale) * (1.0 - m)


def arrival_mismatch(n1: AtomNoise, n2: AtomNoise, params: NoiseParams) -> float:
    return min(1.0, abs(n1.emission_offset - n2.emission_offset) / params.t_interaction)


def _collision_inputs():
    s = 1 / math.sqrt(2)
    basis = [(a, b) for a in ("f", "e") for b in ("f", "g")]
    vec = {"f": 0, "e": 1, "g": 2}
    states = []
    for a, b in basis:
        va, vb = np.zeros(3, complex), np.zeros(3, complex)
        va[vec[a]] = vb[vec[b]] = 1
        states.append((va, vb))
    plus_a = np.array([s, s, 0], complex)
    plus_b = np.array([s, 0, s], complex)
    plus_i_b = np.array([s, 0, 1j * s], complex)
    states += [(plus_a, plus_b), (plus_a, plus_i_b)]
    return states


def collision_fidelity(arrival_mismatch_frac: float, params: NoiseParams | None = None) -> float:
    """Mean fidelity of a mistimed collision against the ideal CPhase.

    The overlap is cut to ``1 - mismatch`` of its nominal length, the gate
    is integrated from the effective Hamiltonian, and the output is compared
    with the exact pi-phase map over four logical basis inputs and two
    superpositions.  ``params`` is accepted so callers can pass a run's
    noise set uniformly; only timing enters this gate model.
    """
    if arrival_mismatch_frac < 0:
        raise InvalidInputError("mismatch must be non-negative")
    lam_t = math.pi * (1.0 - min(1.0, arrival_mismatch_frac))
    reg = (core.atom("A"), core.atom("B"))
    total = 0.0
    inputs = _collision_inputs()
    for va, vb in inputs:
        psi = core.from_vectors(reg, [va, vb])
        ideal = interactions.dispersive_collision(psi, "A", "B", math.pi)
        real = interactions.dispersive_collision_physical(psi, "A", "B", lam_t)
        total += core.fidelity(ideal, real)
    return total / len(inputs)
