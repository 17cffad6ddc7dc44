"""Chip configuration, clock-level scheduling and the physical simulation.

A chip is a row of beamlines, each fed by a single-atom source that fires
once per clock slot and, optionally, a memory cavity that entangles the
three atoms of every pulse.  Beamlines of alternating parity run along
perpendicular axes; a collision site sits where two of them cross.

The scheduler works purely on slot arithmetic and never touches a state
vector.  :func:`run_physical` replays a timeline through the gate set of
:mod:`atombeam.interactions` and returns the resulting register.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import cluster, core, interactions, noise as noise_mod
from .cluster import PULSE_LENGTH, PULSE_PERIOD, QubitNode, Topology
from .core import StateVector
from .errors import CapacityError, InvalidInputError, SchemaError, UnsupportedRegimeError

CHIP_SCHEMA = 1
MIN_DETUNING_RATIO = 10.0


class BasisRole(enum.Enum):
    EF = "ef"
    FG = "fg"
    SPACER = "spacer"


PULSE_ROLES = (BasisRole.EF, BasisRole.FG, BasisRole.EF, BasisRole.SPACER)
ROLE_PAIRS = {BasisRole.EF: ("f", "e"), BasisRole.FG: ("f", "g")}


def slot_role(slot: int) -> BasisRole:
    return PULSE_ROLES[slot % PULSE_PERIOD]


@dataclass(frozen=True)
class SourceParams:
    p_emit: float = 0.9
    fill_efficiency: float = 1.0
    emission_jitter_sigma: float = 1e-8

    def __post_init__(self):
        for name in ("p_emit", "fill_efficiency"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        if self.emission_jitter_sigma < 0:
            raise InvalidInputError("emission_jitter_sigma must be non-negative")


@dataclass(frozen=True)
class BeamlineConfig:
    index: int
    delay_cycles: int
    velocity: float = 250.0
    source: SourceParams = field(default_factory=SourceParams)

    @property
    def axis(self) -> str:
        return "x" if self.index % 2 == 0 else "y"


@dataclass(frozen=True)
class CollisionSite:
    """Crossing of beams ``first`` and ``second``.

    Slot ``s`` of ``first`` meets slot ``s - lag`` of ``second``.
    ``detuning`` is the cavity detuning in units of the vacuum Rabi
    frequency.
    """

    first: int
    second: int
    lag: int
    on: bool = True
    kind: str = "diagonal"
    detuning: float = 20.0


@dataclass(frozen=True)
class ChipConfig:
    beams: tuple
    collision_sites: tuple
    memory_cavities: tuple
    clock_period: float = 1e-5

    @property
    def n_beams(self) -> int:
        return len(self.beams)

    def with_site(self, index: int, on: bool) -> "ChipConfig":
        sites = list(self.collision_sites)
        s = sites[index]
        sites[index] = CollisionSite(s.first, s.second, s.lag, on, s.kind, s.detuning)
        return ChipConfig(self.beams, tuple(sites), self.memory_cavities, self.clock_period)

    def with_memory(self, beam: int, on: bool) -> "ChipConfig":
        mem = list(self.memory_cavities)
        mem[beam] = on
        return ChipConfig(self.beams, self.collision_sites, tuple(mem), self.clock_period)

    def with_sources(self, source: SourceParams) -> "ChipConfig":
        beams = tuple(BeamlineConfig(b.index, b.delay_cycles, b.velocity, source) for b in self.beams)
        return ChipConfig(beams, self.collision_sites, self.memory_cavities, self.clock_period)


def chip_preset(kind, beams: int, *, source: SourceParams | None = None) -> ChipConfig:
    """Configuration whose emergent graph is ``topology_preset(kind, beams, .)``."""
    kind = Topology(kind) if not isinstance(kind, Topology) else kind
    min_beams = 1 if kind is Topology.LATTICE2D else 2
    if beams < min_beams:
        raise InvalidInputError(f"{kind.value} needs at least {min_beams} beams")
    src = source if source is not None else SourceParams()
    lines = tuple(BeamlineConfig(b, b, source=src) for b in range(beams))
    sites = [CollisionSite(b, b + 1, 1) for b in range(beams - 1)]
    # an odd beam count has no crossing that closes the ring; the preset
    # then degenerates to the open lattice, as topology_preset does
    if cluster.wraps(kind, beams):
        lag = 1 if kind is Topology.TUBE else 1 - PULSE_PERIOD
        sites.append(CollisionSite(beams - 1, 0, lag, kind="wrap"))
    return ChipConfig(lines, tuple(sites), (True,) * beams)


# --- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


def validate_chip(config: ChipConfig) -> list[Diagnostic]:
    """Every reason the configuration cannot run; empty means valid."""
    out: list[Diagnostic] = []
    n = config.n_beams
    if [b.index for b in config.beams] != list(range(n)):
        out.append(Diagnostic("geometry", "beamline indices must be 0..n-1 in order"))
        return out
    if len(config.memory_cavities) != n:
        out.append(Diagnostic("geometry", "one memory-cavity flag per beamline is required"))
    if not config.clock_period > 0:
        out.append(Diagnostic("timing", "clock period must be positive"))
    for b in config.beams:
        if b.velocity <= 0:
            out.append(Diagnostic("timing", f"beam {b.index} velocity must be positive"))
    for a, b in zip(config.beams, config.beams[1:]):
        if b.delay_cycles - a.delay_cycles != 1:
            out.append(Diagnostic(
                "misalignment",
                f"beams {a.index} and {b.index} need a one-cycle delay step, got "
                f"{b.delay_cycles - a.delay_cycles}"))
    for i, s in enumerate(config.collision_sites):
        where = f"site {i} ({s.first}, {s.second})"
        if not (0 <= s.first < n and 0 <= s.second < n):
            out.append(Diagnostic("geometry", f"{where} names a missing beamline"))
            continue
        if (s.first - s.second) % 2 == 0:
            out.append(Diagnostic("geometry", f"{where} joins parallel beams that never cross"))
        if s.kind not in ("diagonal", "wrap"):
            out.append(Diagnostic("geometry", f"{where} has unknown kind {s.kind!r}"))
        elif s.kind == "diagonal":
            if s.second != s.first + 1:
                out.append(Diagnostic("geometry", f"{where} is not between neighbouring beams"))
            else:
                step = config.beams[s.second].delay_cycles - config.beams[s.first].delay_cycles
                if s.lag != step:
                    out.append(Diagnostic(
                        "misalignment", f"{where} lag {s.lag} differs from the delay step {step}"))
        if s.lag % 2 == 0:
            out.append(Diagnostic(
                "misalignment", f"{where} lag {s.lag} pairs atoms of the same basis role"))
        if s.detuning < MIN_DETUNING_RATIO:
            out.append(Diagnostic(
                "regime", f"{where} detuning {s.detuning} is below {MIN_DETUNING_RATIO} (not dispersive)"))
    return out


def require_valid(config: ChipConfig) -> None:
    diags = validate_chip(config)
    if diags:
        raise InvalidInputError("; ".join(str(d) for d in diags))


# --- scheduling ------------------------------------------------------------------


@dataclass(frozen=True)
class AtomEvent:
    beamline: int
    cycle: int
    role: BasisRole
    emission_time: float
    filled: bool = True
    voided: bool = False

    @property
    def node(self) -> QubitNode:
        return QubitNode(self.beamline, self.cycle)

    @property
    def pulse(self) -> int:
        return self.cycle // PULSE_PERIOD

    @property
    def present(self) -> bool:
        return self.role is not BasisRole.SPACER and self.filled and not self.voided


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    site: int
    ef_atom: QubitNode
    fg_atom: QubitNode


@dataclass(frozen=True)
class Timeline:
    config: ChipConfig
    n_cycles: int
    atoms: tuple
    collisions: tuple
    perturbations: dict | None = None

    def atom(self, beamline: int, cycle: int) -> AtomEvent:
        return self._index[(beamline, cycle)]

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {(a.beamline, a.cycle): a for a in self.atoms}
            object.__setattr__(self, "_idx", idx)
        return idx

    def present_nodes(self) -> list[QubitNode]:
        return sorted(a.node for a in self.atoms if a.present)

    def event_log(self) -> list[tuple]:
        """(time, type, beamline, cycle, role) rows in time order."""
        rows = []
        for a in self.atoms:
            kind = "emit" if a.filled else "empty"
            if a.voided and a.filled:
                kind = "discard"
            rows.append((a.emission_time, kind, a.beamline, a.cycle, a.role.value))
        for c in self.collisions:
            rows.append((c.time, "collide", c.ef_atom.beamline, c.ef_atom.cycle,
                         f"with b{c.fg_atom.beamline}c{c.fg_atom.cycle}"))
        return sorted(rows, key=lambda r: (r[0], r[2], r[3]))


def _fill_draws(config: ChipConfig, n_cycles: int, rng) -> np.ndarray:
    if rng is None:
        return np.zeros((config.n_beams, n_cycles))
    return rng.random((config.n_beams, n_cycles))


def schedule(config: ChipConfig, n_cycles: int, noise: noise_mod.NoiseParams | None = None,
             rng: np.random.Generator | None = None) -> Timeline:
    """Lay out every emission and collision of an ``n_cycles`` window.

    Fill draws come first from ``rng`` (one uniform per slot), then the
    per-atom perturbations when ``noise`` is given.  A slot is empty when
    its draw is at or above the source fill efficiency; an empty data slot
    voids its whole pulse.  Without ``rng`` every source fills (the ideal
    window), unless its efficiency is exactly zero.
    """
    require_valid(config)
    if n_cycles < 0:
        raise InvalidInputError("n_cycles must be non-negative")
    u = _fill_draws(config, n_cycles, rng)
    missing = [(b.index, s) for b in config.beams for s in range(n_cycles)
               if u[b.index, s] >= b.source.fill_efficiency]
    void = cluster.voided_slots(config.n_beams, n_cycles, missing)
    missing = set(missing)
    period = config.clock_period
    atoms = []
    for b in config.beams:
        for s in range(n_cycles):
            atoms.append(AtomEvent(b.index, s, slot_role(s), (s + b.delay_cycles) * period,
                                   filled=(b.index, s) not in missing,
                                   voided=(b.index, s) in void))
    by_key = {(a.beamline, a.cycle): a for a in atoms}

    collisions = []
    for i, site in enumerate(config.collision_sites):
        if not site.on:
            continue
        for s in range(n_cycles):
            a = by_key.get((site.first, s))
            b = by_key.get((site.second, s - site.lag))
            if a is None or b is None or not (a.present and b.present):
                continue
            roles = {a.role: a, b.role: b}
            if set(roles) != {BasisRole.EF, BasisRole.FG}:
                continue
            t = max(a.emission_time, b.emission_time)
            collisions.append(CollisionEvent(t, i, roles[BasisRole.EF].node, roles[BasisRole.FG].node))
    collisions.sort(key=lambda c: (c.time, c.site, c.ef_atom))

    perturb = None
    if noise is not None:
        if rng is None:
            raise InvalidInputError("a noisy schedule needs an rng")
        keys = [(a.beamline, a.cycle) for a in atoms]
        perturb = noise_mod.sample_run_noise(noise, keys, rng)
    return Timeline(config, n_cycles, tuple(atoms), tuple(collisions), perturb)


def emergent_graph(timeline: Timeline) -> cluster.EntanglementGraph:
    """Graph implied by a timeline: memory bonds inside pulses plus collisions."""
    nodes = set(timeline.present_nodes())
    edges = set()
    mem = timeline.config.memory_cavities
    for n in nodes:
        if mem[n.beamline] and n.cycle % PULSE_PERIOD < PULSE_LENGTH - 1:
            nxt = QubitNode(n.beamline, n.cycle + 1)
            if nxt in nodes:
                edges.add(frozenset((n, nxt)))
    for c in timeline.collisions:
        edges.add(frozenset((c.ef_atom, c.fg_atom)))
    return cluster.EntanglementGraph(frozenset(nodes), frozenset(edges))


# --- physical simulation ---------------------------------------------------------


@dataclass
class PhysicalResult:
    state: StateVector
    timeline: Timeline
    leaked: float = 0.0
    cavity_jumps: int = 0

    @property
    def graph(self) -> cluster.EntanglementGraph:
        return emergent_graph(self.timeline)


def _project_pair(state: StateVector, label, pair) -> StateVector:
    """Keep only the pair's amplitudes; no renormalisation."""
    spec = state.spec(label)
    if spec.levels == tuple(pair):
        return state
    state = core.embed_atom(state, label)
    ax = state.axis(label)
    keep = [core.ATOM_LEVELS.index(lv) for lv in pair]
    t = np.take(state.tensor(), keep, axis=ax)
    reg = state.register[:ax] + (core.qubit(label, tuple(pair)),) + state.register[ax + 1:]
    return StateVector(reg, t.reshape(-1))


def _unit(state: StateVector) -> StateVector:
    n = state.norm()
    return StateVector(state.register, state.amps / n) if n > 0 else state


def _drop_cavity(state: StateVector, cav, rng, noisy: bool) -> StateVector:
    """Remove the memory cavity, reading its photon number when noisy."""
    if not noisy:
        if core.schmidt_rank(state, [cav]) != 1:
            raise UnsupportedRegimeError("memory cavity still entangled after absorption")
        return core.remove(state, cav, level=0)
    d = state.spec(cav).dim
    probs = np.array([core.weight_on(state, cav, [n]) for n in range(d)])
    n = int(rng.choice(d, p=probs / probs.sum()))
    proj = np.zeros((d, d), dtype=complex)
    proj[n, n] = 1
    _, kept = core.apply_kraus(state, core.LocalOperator((cav,), proj, kraus=True))
    return core.remove(kept, cav, level=n)


def _pulse_state(timeline: Timeline, beam: int, pulse: int, perturb, params, rng,
                 graph_frame: bool) -> tuple[StateVector, int]:
    """Register of one pulse's in-window atoms after memory and frame."""
    config = timeline.config
    n_cycles = timeline.n_cycles
    slots = [pulse * PULSE_PERIOD + k for k in range(PULSE_LENGTH)]
    in_window = [s < n_cycles for s in slots]
    labels = [QubitNode(beam, s) if w else ("virtual", beam, s) for s, w in zip(slots, in_window)]
    pairs = [ROLE_PAIRS[slot_role(s)] for s in slots]
    noisy = params is not None
    jumps = 0

    def pert(s):
        if perturb is None:
            return noise_mod.AtomNoise()
        return perturb.get((beam, s), noise_mod.AtomNoise())

    if not config.memory_cavities[beam]:
        state = core.empty_state()
        for s, lab, pair, w in zip(slots, labels, pairs, in_window):
            if w:
                state = core.tensor_product(state, StateVector(
                    (core.qubit(lab, pair),), np.full(2, 1 / math.sqrt(2), dtype=complex)))
        return state, 0

    cav = ("cavity", beam, pulse)
    n_max = 2 if noisy else 1
    reg = [core.atom(l) for l in labels] + [core.cavity(cav, n_max)]
    state = core.new_product_state(reg, ["f", "f", "f", 0])
    areas = [pert(s).area_scale for s in slots]
    ramsey = [pert(s).ramsey_scale for s in slots]
    decay = None
    if noisy and params.t_cav != math.inf:
        def decay(st, c):
            nonlocal jumps
            st, jumped = noise_mod.cavity_decay(st, c, params.t_between_atoms, params.t_cav, rng)
            jumps += int(jumped)
            return st
    state = interactions.memory_pulse(state, labels, cav, area_scales=areas,
                                      ramsey_scales=ramsey, decay=decay)
    state = _drop_cavity(state, cav, rng, noisy)
    state = interactions.to_graph_frame(state, labels, pairs, ramsey)
    for lab, pair in zip(labels, pairs):
        state = _project_pair(state, lab, pair)

    # out-of-window atoms of a truncated pulse leave by a Z measurement
    for i, (lab, w) in enumerate(zip(labels, in_window)):
        if w:
            continue
        p_plus, p_minus = core.outcome_probabilities(state, lab, core.MeasurementBasis.z())
        total = p_plus + p_minus
        outcome = +1 if (rng.random() if rng is not None else 0.0) < p_plus / total else -1
        _, state = core.project(state, lab, core.MeasurementBasis.z(), outcome)
        state = core.remove(state, lab, level=pairs[i][0] if outcome == 1 else pairs[i][1])
        if outcome == -1:
            for j in (i - 1, i + 1):
                if 0 <= j < PULSE_LENGTH and in_window[j]:
                    state = core.apply_matrix(state, [labels[j]], np.diag([1, -1]).astype(complex))
    if not graph_frame:
        keep = [(l, p) for l, p, w in zip(labels, pairs, in_window) if w]
        for lab, pair in keep:
            state = interactions.ramsey_rotate(state, lab, interactions.RamseyPulse.hadamard(pair))
    return state, jumps


def run_physical(config: ChipConfig, n_cycles: int, noise: noise_mod.NoiseParams | None = None,
                 rng: np.random.Generator | None = None, *, graph_frame: bool = True,
                 timeline: Timeline | None = None) -> PhysicalResult:
    """Simulate the chip for ``n_cycles`` slots and return the atom register.

    Memory pulses run first, then a Hadamard on each atom's working pair
    (the graph frame), then the collisions in time order.  Each present atom
    ends as a qubit on its working pair with f as |0>, ordered by node.
    With ``graph_frame=False`` the memory output is returned untouched by
    the frame Hadamards; collisions are then not applied.

    Under noise, leakage out of the working pairs is dropped and reported
    as ``leaked`` (a heralded failure at readout).
    """
    if timeline is None:
        timeline = schedule(config, n_cycles, noise, rng)
    nodes = timeline.present_nodes()
    if len(nodes) > cluster.MAX_GRAPH_NODES:
        raise CapacityError(
            f"{len(nodes)} atoms exceed the state-vector bound of {cluster.MAX_GRAPH_NODES}")
    if rng is None:
        rng = np.random.default_rng(0)
    perturb = timeline.perturbations

    pulses = sorted({(n.beamline, n.cycle // PULSE_PERIOD) for n in nodes},
                    key=lambda bp: (-(bp[1] * PULSE_PERIOD + PULSE_LENGTH > n_cycles), bp))
    state = core.empty_state()
    jumps = 0
    for beam, pulse in pulses:
        part, j = _pulse_state(timeline, beam, pulse, perturb, noise, rng, graph_frame)
        jumps += j
        state = core.tensor_product(state, part)

    if noise is not None and perturb is not None:
        for n in nodes:
            phase = perturb.get((n.beamline, n.cycle), noise_mod.AtomNoise()).stray_phase
            if phase:
                state = noise_mod.stray_dephase(state, n, phase)

    if graph_frame:
        for c in timeline.collisions:
            if noise is None:
                lam_t = math.pi
            else:
                lam_t = noise_mod.collision_lambda_t(
                    perturb[(c.ef_atom.beamline, c.ef_atom.cycle)],
                    perturb[(c.fg_atom.beamline, c.fg_atom.cycle)], noise)
            state = interactions.dispersive_collision(state, c.ef_atom, c.fg_atom, lam_t)
            state = _project_pair(state, c.ef_atom, ROLE_PAIRS[BasisRole.EF])
            state = _project_pair(state, c.fg_atom, ROLE_PAIRS[BasisRole.FG])

    kept = state.norm() ** 2
    state = core.permute(_unit(state), nodes) if nodes else state
    return PhysicalResult(state, timeline, leaked=max(0.0, 1.0 - kept), cavity_jumps=jumps)


def ideal_state(graph: cluster.EntanglementGraph) -> StateVector:
    return cluster.graph_state(graph)


def overlap_fidelity(state: StateVector, graph: cluster.EntanglementGraph) -> float:
    """|<G|psi>|^2 with psi's atoms read as qubits (f -> 0)."""
    if [s.dim for s in state.register] != [2] * len(state.register):
        raise InvalidInputError("state must be all qubits")
    target = cluster.graph_state(graph, labels=state.labels)
    return float(min(1.0, abs(np.vdot(target.amps, state.amps)) ** 2))


# --- serialisation ------------------------------------------------------------------


def config_to_dict(config: ChipConfig) -> dict:
    return {
        "schema_version": CHIP_SCHEMA,
        "kind": "chip",
        "clock_period": config.clock_period,
        "beams": [{"index": b.index, "delay_cycles": b.delay_cycles, "velocity": b.velocity,
                   "memory_cavity": bool(m),
                   "source": {"p_emit": b.source.p_emit, "fill_efficiency": b.source.fill_efficiency,
                              "emission_jitter_sigma": b.source.emission_jitter_sigma}}
                  for b, m in zip(config.beams, config.memory_cavities)],
        "collision_sites": [{"first": s.first, "second": s.second, "lag": s.lag, "on": s.on,
                             "kind": s.kind, "detuning": s.detuning}
                            for s in config.collision_sites],
    }


def config_from_dict(data: dict) -> ChipConfig:
    if data.get("kind") != "chip" or data.get("schema_version") != CHIP_SCHEMA:
        raise SchemaError("not a version-1 chip document")
    try:
        beams, mem = [], []
        for b in data["beams"]:
            src = SourceParams(**b.get("source", {}))
            beams.append(BeamlineConfig(int(b["index"]), int(b["delay_cycles"]),
                                        float(b.get("velocity", 250.0)), src))
            mem.append(bool(b.get("memory_cavity", True)))
        sites = [CollisionSite(int(s["first"]), int(s["second"]), int(s["lag"]),
                               bool(s.get("on", True)), str(s.get("kind", "diagonal")),
                               float(s.get("detuning", 20.0)))
                 for s in data["collision_sites"]]
        return ChipConfig(tuple(beams), tuple(sites), tuple(mem),
                          float(data.get("clock_period", 1e-5)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed chip document: {exc}") from exc
