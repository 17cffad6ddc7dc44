"""Entanglement graphs, ideal graph states and stabilizer checks.

Graph coordinates are (beamline, cycle) where ``cycle`` is the source
clock slot of that beam.  Each source repeats a period of four slots:
three memory-entangled atoms (roles EF, FG, EF) followed by one spacer.
Beam ``b + 1`` runs one slot behind beam ``b``, so the atom in slot ``s``
of beam ``b`` meets slot ``s - 1`` of beam ``b + 1``; the pair carries
complementary bases exactly when ``s % 4`` is 1 or 2.  The other slot
phases are the lattice's periodic missing links.
"""

from __future__ import annotations

import enum
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import core
from .core import StateVector
from .errors import CapacityError, InvalidInputError, SchemaError

MAX_GRAPH_NODES = 20
PULSE_PERIOD = 4
PULSE_LENGTH = 3


class Role(enum.Enum):
    DATA = "data"
    SPACER = "spacer"


class Topology(enum.Enum):
    LATTICE2D = "lattice"
    TUBE = "tube"
    HELIX = "helix"


@dataclass(frozen=True, order=True)
class QubitNode:
    beamline: int
    cycle: int
    role: Role = field(default=Role.DATA, compare=False)

    def __str__(self):
        return f"b{self.beamline}c{self.cycle}"


def _edge(a, b) -> frozenset:
    if a == b:
        raise InvalidInputError(f"self-loop on {a}")
    return frozenset((a, b))


@dataclass(frozen=True)
class EntanglementGraph:
    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(_edge(*e) if not isinstance(e, frozenset) else e for e in self.edges)
        for e in edges:
            if len(e) != 2:
                raise InvalidInputError("edges must join two distinct nodes")
            if not e <= nodes:
                raise InvalidInputError(f"edge {tuple(e)} references a missing node")
        for n in nodes:
            if getattr(n, "role", Role.DATA) is Role.SPACER and any(n in e for e in edges):
                raise InvalidInputError(f"spacer {n} must not be bonded")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, edges: Iterable, nodes: Iterable = ()) -> "EntanglementGraph":
        edges = [frozenset(e) for e in edges]
        allnodes = set(nodes)
        for e in edges:
            allnodes |= e
        return cls(frozenset(allnodes), frozenset(edges))

    def sorted_nodes(self) -> list:
        return sorted(self.nodes)

    def neighbors(self, node) -> set:
        return {m for e in self.edges if node in e for m in e if m != node}

    def degree(self, node) -> int:
        return len(self.neighbors(node))

    def without_nodes(self, drop: Iterable) -> "EntanglementGraph":
        drop = set(drop)
        return EntanglementGraph(self.nodes - drop, frozenset(e for e in self.edges if not e & drop))

    def without_edge(self, a, b) -> "EntanglementGraph":
        return EntanglementGraph(self.nodes, self.edges - {frozenset((a, b))})

    def edge_list(self) -> list[tuple]:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(tuple(e) for e in self.edges)
        return g


# --- ideal graph states ------------------------------------------------------


def _check_capacity(n: int) -> None:
    if n > MAX_GRAPH_NODES:
        raise CapacityError(f"{n} qubits exceed the brute-force bound of {MAX_GRAPH_NODES}")


def cz_phases(n: int, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """(-1)^(sum x_a x_b) over the computational basis of ``n`` qubits."""
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for a, b in pairs:
        parity ^= ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
    return 1 - 2 * parity


CZ = np.diag([1, 1, 1, -1]).astype(complex)


def graph_state(graph: EntanglementGraph, edge_order: Sequence | None = None,
                labels: Sequence | None = None) -> StateVector:
    """|+>^n followed by CZ on every edge, register ordered by node.

    With ``edge_order`` the CZs are applied one by one in that order;
    otherwise the diagonal phase pattern is written in one pass.
    """
    order = list(labels) if labels is not None else graph.sorted_nodes()
    if set(order) != set(graph.nodes):
        raise InvalidInputError("labels must list every graph node once")
    n = len(order)
    _check_capacity(n)
    reg = tuple(core.qubit(l) for l in order)
    plus = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    if edge_order is None:
        pos = {l: i for i, l in enumerate(order)}
        pairs = [tuple(pos[x] for x in e) for e in graph.edges]
        return StateVector(reg, plus * cz_phases(n, pairs))
    state = StateVector(reg, plus)
    if {frozenset(e) for e in edge_order} != set(graph.edges):
        raise InvalidInputError("edge_order must be a permutation of the graph edges")
    for e in edge_order:
        state = core.apply_matrix(state, list(e), CZ)
    return state


def stabilizer_expectations(state: StateVector, graph: EntanglementGraph) -> dict:
    """<K_a> for K_a = X_a prod_{b in N(a)} Z_b, per node."""
    if set(state.labels) != set(graph.nodes) or any(d != 2 for d in state.dims):
        raise InvalidInputError("register must be one qubit per graph node")
    n = len(state.register)
    pos = {l: i for i, l in enumerate(state.labels)}
    idx = np.arange(2**n)
    psi = state.amps
    out = {}
    for a in graph.nodes:
        sign = np.ones(2**n)
        for b in graph.neighbors(a):
            sign *= 1 - 2 * ((idx >> (n - 1 - pos[b])) & 1)
        flipped = idx ^ (1 << (n - 1 - pos[a]))
        out[a] = float(np.real(np.vdot(psi, sign * psi[flipped])))
    return out


def stabilizer_check(state: StateVector, graph: EntanglementGraph, tol: float = 1e-9) -> bool:
    return all(abs(v - 1) <= tol for v in stabilizer_expectations(state, graph).values())


# --- topology presets --------------------------------------------------------


def data_slot(slot: int) -> bool:
    return slot % PULSE_PERIOD != PULSE_PERIOD - 1


def collides(slot: int) -> bool:
    """Slot phases of the leading beam that meet a complementary partner."""
    return slot % PULSE_PERIOD in (1, 2)


def voided_slots(beams: int, cycles: int, missing: Iterable = ()) -> set:
    """Slots removed by fill failures: one empty data slot voids its pulse."""
    out = set()
    for b, s in missing:
        if 0 <= b < beams and 0 <= s < cycles and data_slot(s):
            p0 = s - s % PULSE_PERIOD
            out |= {(b, p0 + k) for k in range(PULSE_LENGTH)}
    return out


def wraps(kind: Topology, beams: int) -> bool:
    # the closing site must cross an even beam with an odd one
    return kind is not Topology.LATTICE2D and beams >= 2 and beams % 2 == 0


def topology_preset(kind, beams: int, cycles: int, missing_mask: Iterable = ()) -> EntanglementGraph:
    """Closed-form graph of the chip's default mode and its variants.

    Lattice2D: memory bonds (b, s)-(b, s+1) inside pulses and collision
    bonds (b, s)-(b+1, s-1).  Tube adds the off-diagonal site closing beam
    ``beams-1`` onto beam 0 with the same one-slot lag; Helix closes it one
    pulse further along, (beams-1, s)-(0, s+3).  Both need an even beam
    count.  ``missing_mask`` lists empty (beam, cycle) slots.
    """
    kind = Topology(kind) if not isinstance(kind, Topology) else kind
    min_beams = 1 if kind is Topology.LATTICE2D else 2
    if beams < min_beams or cycles < 1:
        raise InvalidInputError(f"{kind.value} needs beams >= {min_beams} and cycles >= 1")
    void = voided_slots(beams, cycles, missing_mask)

    def present(b, s):
        return 0 <= b < beams and 0 <= s < cycles and data_slot(s) and (b, s) not in void

    nodes = {QubitNode(b, s) for b in range(beams) for s in range(cycles) if present(b, s)}
    edges = set()

    def bond(p, q):
        if present(*p) and present(*q):
            edges.add(frozenset((QubitNode(*p), QubitNode(*q))))

    for b in range(beams):
        for s in range(cycles):
            if s % PULSE_PERIOD in (0, 1):
                bond((b, s), (b, s + 1))
            if collides(s) and b + 1 < beams:
                bond((b, s), (b + 1, s - 1))
    if wraps(kind, beams):
        last = beams - 1
        for s in range(cycles):
            if collides(s):
                if kind is Topology.TUBE:
                    bond((last, s), (0, s - 1))
                else:
                    bond((last, s), (0, s + PULSE_PERIOD - 1))
    return EntanglementGraph(frozenset(nodes), frozenset(edges))


# --- export --------------------------------------------------------------------

GRAPH_SCHEMA = 1


def to_dot(graph: EntanglementGraph, name: str = "cluster") -> str:
    lines = [f"graph {name} {{"]
    for n in graph.sorted_nodes():
        lines.append(f'  "{n}" [beamline={n.beamline}, cycle={n.cycle}, '
                     f'pos="{n.cycle},{-n.beamline}!"];')
    for a, b in graph.edge_list():
        lines.append(f'  "{a}" -- "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: EntanglementGraph) -> dict:
    return {
        "schema_version": GRAPH_SCHEMA,
        "kind": "graph",
        "nodes": [[n.beamline, n.cycle] for n in graph.sorted_nodes()],
        "edges": [[[a.beamline, a.cycle], [b.beamline, b.cycle]] for a, b in graph.edge_list()],
    }


def graph_from_dict(data: dict) -> EntanglementGraph:
    if data.get("kind") != "graph" or data.get("schema_version") != GRAPH_SCHEMA:
        raise SchemaError("not a version-1 graph document")
    try:
        nodes = [QubitNode(int(b), int(c)) for b, c in data["nodes"]]
        edges = [(QubitNode(*map(int, p)), QubitNode(*map(int, q))) for p, q in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed graph document: {exc}") from exc
    return EntanglementGraph.from_edges(edges, nodes)


def graph_to_text(graph: EntanglementGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=1) + "\n"


def plus_state(label) -> StateVector:
    return StateVector((core.qubit(label),), np.full(2, 1 / math.sqrt(2), dtype=complex))
