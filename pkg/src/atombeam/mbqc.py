"""Adaptive measurement patterns on cluster states.

A pattern is an ordered list of single-qubit measurements.  Each step
carries two dependency sets over earlier steps:

``sign_deps``
    the measurement angle is negated when the XOR of those signals is 1
    (equatorial measurements only);
``flip_deps``
    the step's signal is its raw outcome bit XOR those signals.

Raw outcome bit 0 is the +1 eigenstate.  Output corrections are given the
same way, as X and Z domains per output node; together they form the
:class:`PauliFrame` returned by :func:`run_pattern`.

Patterns built here derive both sets from a flow (``f(i)`` is the node
that absorbs the X byproduct of measuring ``i``), so feed-forward is
exact on every branch.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from networkx.algorithms import isomorphism

from . import core
from .cluster import EntanglementGraph, QubitNode, cz_phases
from .core import BasisKind, MeasurementBasis, StateVector
from .errors import CapacityError, InvalidInputError, InvalidPatternError, PlacementError

MAX_VERIFY_NODES = 16
_PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class MeasurementStep:
    node: object
    basis: MeasurementBasis
    sign_deps: frozenset = frozenset()
    flip_deps: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "sign_deps", frozenset(self.sign_deps))
        object.__setattr__(self, "flip_deps", frozenset(self.flip_deps))


@dataclass(frozen=True)
class PauliFrame:
    x: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)

    def is_trivial(self) -> bool:
        return not any(self.x.values()) and not any(self.z.values())


@dataclass(frozen=True, eq=False)
class MeasurementPattern:
    steps: tuple = ()
    inputs: tuple = ()
    outputs: tuple = ()
    x_corrections: Mapping = field(default_factory=dict)
    z_corrections: Mapping = field(default_factory=dict)
    graph: EntanglementGraph | None = None

    def __post_init__(self):
        for name in ("steps", "inputs", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("x_corrections", "z_corrections"):
            object.__setattr__(self, name, {k: frozenset(v) for k, v in getattr(self, name).items()})
        self.validate()

    @property
    def measured(self) -> list:
        return [s.node for s in self.steps]

    def validate(self, graph: EntanglementGraph | None = None) -> None:
        graph = graph if graph is not None else self.graph
        seen = set()
        for k, step in enumerate(self.steps):
            bad = [d for d in step.sign_deps | step.flip_deps if not 0 <= d < k]
            if bad:
                raise InvalidPatternError(f"step {k}: dependencies {sorted(bad)} are not earlier steps")
            if step.node in seen:
                raise InvalidPatternError(f"step {k}: node {step.node} measured twice")
            if step.node in self.outputs:
                raise InvalidPatternError(f"step {k}: output {step.node} must not be measured")
            seen.add(step.node)
        for o, deps in itertools.chain(self.x_corrections.items(), self.z_corrections.items()):
            if o not in self.outputs:
                raise InvalidPatternError(f"correction on non-output {o}")
            if any(not 0 <= d < len(self.steps) for d in deps):
                raise InvalidPatternError(f"correction on {o} references unknown steps")
        if graph is not None:
            nodes = set(graph.nodes)
            if not set(self.inputs) <= nodes or not set(self.outputs) <= nodes:
                raise InvalidPatternError("inputs and outputs must be graph nodes")
            if seen | set(self.outputs) != nodes or seen & set(self.outputs):
                raise InvalidPatternError("every non-output node must be measured exactly once")


# --- execution -----------------------------------------------------------------


def measure_out(state: StateVector, target, basis: MeasurementBasis, outcome: int):
    """Project ``target`` onto an outcome and drop it; (prob, reduced state)."""
    vec = core._outcome_vector(state, target, basis, outcome)
    ax = state.axis(target)
    t = np.moveaxis(state.tensor(), ax, 0)
    reduced = np.tensordot(vec.conj(), t, axes=(0, 0))
    p = float(np.sum(np.abs(reduced) ** 2))
    reg = state.register[:ax] + state.register[ax + 1:]
    if p <= 0.0:
        return 0.0, StateVector(reg, reduced.reshape(-1))
    return p, StateVector(reg, reduced.reshape(-1) / math.sqrt(p))


def _prepare(graph: EntanglementGraph, inputs: Sequence, input_state: StateVector) -> StateVector:
    """Inputs carry ``input_state``, all other nodes |+>, then CZ on every edge.

    Subsystems of ``input_state`` beyond the inputs (reference qubits) are
    carried through untouched and stay at the front of the register.
    """
    inputs = list(inputs)
    labels = input_state.labels
    if set(inputs) <= set(labels):
        extra = [l for l in labels if l not in inputs]
        state = core.permute(input_state, extra + inputs)
    else:
        n_extra = len(labels) - len(inputs)
        if n_extra < 0:
            raise InvalidInputError("input state has fewer subsystems than the pattern inputs")
        reg = input_state.register[:n_extra] + tuple(core.qubit(n) for n in inputs)
        if any(d != 2 for d in input_state.dims[n_extra:]):
            raise InvalidInputError("pattern inputs must be qubits")
        state = StateVector(reg, input_state.amps)
        extra = labels[:n_extra]
    if any(l in graph.nodes for l in extra):
        raise InvalidInputError("reference subsystems must not be graph nodes")
    rest = [n for n in graph.sorted_nodes() if n not in inputs]
    n_rest = len(rest)
    plus = StateVector(tuple(core.qubit(n) for n in rest), np.full(2**n_rest, 2 ** (-n_rest / 2)))
    state = core.tensor_product(state, plus)
    order = inputs + rest
    pos = {n: i for i, n in enumerate(order)}
    pairs = [tuple(pos[x] for x in e) for e in graph.edges]
    phases = cz_phases(len(order), pairs)
    n_front = math.prod(state.dims[: len(extra)])
    amps = (state.amps.reshape(n_front, -1) * phases[None, :]).reshape(-1)
    return StateVector(state.register, amps)


def _parity(signals: Sequence[int], deps) -> int:
    return sum(signals[d] for d in deps) & 1


def step_basis(step: MeasurementStep, signals: Sequence[int]) -> MeasurementBasis:
    if step.basis.kind is BasisKind.Z:
        return step.basis
    alpha = step.basis.angle
    if _parity(signals, step.sign_deps):
        alpha = -alpha
    return MeasurementBasis.b(alpha, step.basis.level_pair)


def frame_from_signals(pattern: MeasurementPattern, signals: Sequence[int]) -> PauliFrame:
    return PauliFrame(
        {o: _parity(signals, pattern.x_corrections.get(o, ())) for o in pattern.outputs},
        {o: _parity(signals, pattern.z_corrections.get(o, ())) for o in pattern.outputs},
    )


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)


def apply_frame(state: StateVector, frame: PauliFrame) -> StateVector:
    """Undo the byproduct: apply X^x then Z^z on each output."""
    for node, bit in frame.x.items():
        if bit:
            state = core.apply_matrix(state, [node], _X)
    for node, bit in frame.z.items():
        if bit:
            state = core.apply_matrix(state, [node], _Z)
    return state


def _finish(state: StateVector, pattern: MeasurementPattern) -> StateVector:
    extra = [l for l in state.labels if l not in pattern.outputs]
    return core.permute(state, extra + list(pattern.outputs))


def run_pattern(graph: EntanglementGraph, pattern: MeasurementPattern, input_state: StateVector,
                rng: np.random.Generator | None = None, forced: Sequence[int] | None = None):
    """Execute ``pattern`` on the cluster ``graph``.

    Returns ``(outcomes, output_state, frame)``: raw outcome bits per step,
    the uncorrected output register (any reference subsystems first, then
    the outputs in pattern order) and the Pauli frame to apply.  ``forced``
    fixes the raw bits instead of sampling them.
    """
    pattern.validate(graph)
    if forced is None and rng is None:
        raise InvalidInputError("need an rng or forced outcomes")
    state = _prepare(graph, pattern.inputs, input_state)
    outcomes, signals = [], []
    for k, step in enumerate(pattern.steps):
        basis = step_basis(step, signals)
        if forced is not None:
            bit = int(forced[k])
        else:
            p0, _ = core.outcome_probabilities(state, step.node, basis)
            bit = 0 if rng.random() < p0 else 1
        p, state = measure_out(state, step.node, basis, +1 if bit == 0 else -1)
        if p < _PROB_FLOOR:
            raise InvalidInputError(f"step {k}: forced outcome has zero probability")
        outcomes.append(bit)
        signals.append(bit ^ _parity(signals, step.flip_deps))
    return outcomes, _finish(state, pattern), frame_from_signals(pattern, signals)


def run_pattern_eager(graph: EntanglementGraph, pattern: MeasurementPattern, flow: Mapping,
                      input_state: StateVector, rng: np.random.Generator) -> StateVector:
    """Reference execution without feed-forward.

    Every byproduct is corrected physically right after the measurement
    that produced it (X on ``f(i)``, Z on the other neighbours of ``f(i)``;
    Z on all neighbours for a Z-basis step), and later steps use their bare
    angles.  Returns the corrected output state.
    """
    pattern.validate(graph)
    state = _prepare(graph, pattern.inputs, input_state)
    live = set(graph.nodes)
    for step in pattern.steps:
        outcome, _, _ = core.measure(state, step.node, step.basis, rng)
        _, state = measure_out(state, step.node, step.basis, outcome)
        live.discard(step.node)
        if outcome == -1:
            if step.basis.kind is BasisKind.Z:
                fix = [(n, _Z) for n in graph.neighbors(step.node) if n in live]
            else:
                tgt = flow[step.node]
                fix = [(tgt, _X)] + [(n, _Z) for n in graph.neighbors(tgt)
                                      if n in live and n != step.node]
            for node, m in fix:
                state = core.apply_matrix(state, [node], m)
    return _finish(state, pattern)


# --- pattern construction ----------------------------------------------------


def _is_multiple(x: float, period: float) -> bool:
    r = math.remainder(x, period)
    return abs(r) < 1e-12


def pattern_from_flow(graph: EntanglementGraph, inputs: Sequence, outputs: Sequence,
                      flow: Mapping, order: Sequence, angles: Mapping,
                      z_removed: Sequence = ()) -> MeasurementPattern:
    """Compile feed-forward domains from a flow.

    ``z_removed`` nodes are measured in Z first; ``order`` lists the flow
    nodes in measurement order with ``angles[node]`` the equatorial angle.
    Pauli angles (multiples of pi/2) have their sign dependence folded into
    the outcome flip.
    """
    xdom = {n: set() for n in graph.nodes}
    zdom = {n: set() for n in graph.nodes}
    measured, removed = set(), set(z_removed)
    steps = []

    def live(n):
        return n not in measured

    for node in z_removed:
        k = len(steps)
        steps.append(MeasurementStep(node, MeasurementBasis.z(), (), frozenset(xdom[node])))
        measured.add(node)
        for n in graph.neighbors(node):
            if live(n):
                zdom[n] ^= {k}
    for node in order:
        k = len(steps)
        alpha = float(angles.get(node, 0.0))
        sign, flip = set(xdom[node]), set(zdom[node])
        if _is_multiple(alpha, math.pi):
            sign = set()
        elif _is_multiple(alpha - math.pi / 2, math.pi):
            flip ^= sign
            sign = set()
        steps.append(MeasurementStep(node, MeasurementBasis.b(alpha), frozenset(sign), frozenset(flip)))
        measured.add(node)
        tgt = flow.get(node)
        if tgt is None or not live(tgt) or tgt not in graph.neighbors(node):
            raise InvalidPatternError(f"flow of {node} must be a live neighbour")
        xdom[tgt] ^= {k}
        for n in graph.neighbors(tgt):
            if n == node or n in removed:
                continue
            if not live(n):
                raise InvalidPatternError(f"flow condition broken at {node}: {n} already measured")
            zdom[n] ^= {k}
    return MeasurementPattern(
        tuple(steps), tuple(inputs), tuple(outputs),
        {o: frozenset(xdom[o]) for o in outputs if xdom[o]},
        {o: frozenset(zdom[o]) for o in outputs if zdom[o]},
        graph,
    )


def chain_graph(n: int, beamline: int = 0) -> EntanglementGraph:
    nodes = [QubitNode(beamline, k) for k in range(n)]
    return EntanglementGraph.from_edges(zip(nodes, nodes[1:]), nodes)


def rotation_chain_pattern(angles: Sequence[float], nodes: Sequence | None = None,
                           graph: EntanglementGraph | None = None) -> MeasurementPattern:
    """Wire of ``len(angles) + 1`` qubits measured in B(angle) one after another.

    Implements :func:`chain_unitary` up to the returned frame.  ``nodes``
    may name a path inside an existing ``graph``; other nodes of that graph
    are removed with Z measurements.
    """
    n = len(angles) + 1
    if nodes is None:
        nodes = chain_graph(n).sorted_nodes()
    nodes = list(nodes)
    if len(nodes) != n:
        raise PlacementError(f"need a chain of {n} nodes, got {len(nodes)}")
    if graph is None:
        graph = EntanglementGraph.from_edges(zip(nodes, nodes[1:]), nodes)
    for a, b in zip(nodes, nodes[1:]):
        if frozenset((a, b)) not in graph.edges:
            raise PlacementError(f"{a} and {b} are not bonded")
    flow = dict(zip(nodes, nodes[1:]))
    others = [m for m in graph.sorted_nodes() if m not in nodes]
    return pattern_from_flow(graph, [nodes[0]], [nodes[-1]], flow, nodes[:-1],
                             dict(zip(nodes, angles)), z_removed=others)


H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def chain_unitary(angles: Sequence[float]) -> np.ndarray:
    """Product of H diag(1, e^{-i alpha}) over the chain, first angle acting first."""
    u = np.eye(2, dtype=complex)
    for a in angles:
        u = H @ np.diag([1, np.exp(-1j * a)]) @ u
    return u


# --- CNOT placement ------------------------------------------------------------


def _cnot_template(k: int, a: int, length: int):
    """Tree implementing CNOT with every measurement in X.

    Control wire c0..ck (k even, ck is the control output), target wire
    t0..tL (L even) whose node t_{2a+1} is bonded to ck.  Returns
    (graph, inputs, outputs, flow, order) on string-named nodes.
    """
    cw = [f"c{i}" for i in range(k + 1)]
    tw = [f"t{i}" for i in range(length + 1)]
    hub = tw[2 * a + 1]
    edges = list(zip(cw, cw[1:])) + list(zip(tw, tw[1:])) + [(cw[-1], hub)]
    g = EntanglementGraph.from_edges(edges, cw + tw)
    flow = dict(zip(cw, cw[1:])) | dict(zip(tw, tw[1:]))
    order = cw[:-1] + tw[:-1]
    return g, (cw[0], tw[0]), (cw[-1], tw[-1]), flow, order


def _templates(max_nodes: int):
    shapes = []
    for k in range(0, max_nodes, 2):
        for length in range(2, max_nodes, 2):
            for a in range(length // 2):
                if k + 1 + length + 1 <= max_nodes:
                    shapes.append((k + length + 2, k, a, length))
    shapes.sort()
    for _, k, a, length in shapes:
        yield _cnot_template(k, a, length)


def cnot_pattern(topology: EntanglementGraph, max_nodes: int = 12) -> MeasurementPattern:
    """Place a CNOT (inputs: control, target) on ``topology``.

    Searches the smallest wire-tree template that appears as an induced
    subgraph (so missing bonds are routed around); every other node is
    removed by a Z measurement made before the gate.
    """
    big = topology.to_networkx()
    big = big.subgraph(sorted(big.nodes))
    for tmpl, ins, outs, flow, order in _templates(max_nodes):
        if tmpl.nodes and len(tmpl.nodes) > len(topology.nodes):
            break
        gm = isomorphism.GraphMatcher(big, tmpl.to_networkx())
        for match in gm.subgraph_isomorphisms_iter():
            place = {v: u for u, v in match.items()}
            others = [n for n in topology.sorted_nodes() if n not in match]
            return pattern_from_flow(
                topology,
                [place[n] for n in ins],
                [place[n] for n in outs],
                {place[u]: place[v] for u, v in flow.items()},
                [place[n] for n in order],
                {},
                z_removed=others,
            )
    raise PlacementError("no region of the topology supports a CNOT")


def restrict_pattern(pattern: MeasurementPattern) -> MeasurementPattern:
    """Drop the leading Z-removal steps and the nodes they measured.

    Dependencies on removed steps are dropped (those signals only ever add
    Z byproducts), the remaining step indices are shifted.
    """
    graph = pattern.graph
    drop = [k for k, s in enumerate(pattern.steps) if s.basis.kind is BasisKind.Z]
    if drop != list(range(len(drop))):
        raise InvalidPatternError("Z removals must lead the pattern")
    shift = len(drop)

    def remap(deps):
        return frozenset(d - shift for d in deps if d >= shift)

    steps = [MeasurementStep(s.node, s.basis, remap(s.sign_deps), remap(s.flip_deps))
             for s in pattern.steps[shift:]]
    removed = {pattern.steps[k].node for k in drop}
    sub = graph.without_nodes(removed) if graph is not None else None
    return MeasurementPattern(
        tuple(steps), pattern.inputs, pattern.outputs,
        {o: remap(d) for o, d in pattern.x_corrections.items()},
        {o: remap(d) for o, d in pattern.z_corrections.items()},
        sub,
    )


# --- verification --------------------------------------------------------------


def choi_input(inputs: Sequence) -> StateVector:
    """Max-entangled state of reference qubits ('ref', i) with the inputs."""
    n = len(inputs)
    refs = [("ref", i) for i in range(n)]
    d = 2**n
    amps = np.zeros(d * d, dtype=complex)
    for i in range(d):
        amps[i * d + i] = 1 / math.sqrt(d)
    reg = tuple(core.qubit(r) for r in refs) + tuple(core.qubit(x) for x in inputs)
    return StateVector(reg, amps)


def branch_fidelities(graph: EntanglementGraph, pattern: MeasurementPattern,
                      target_unitary: np.ndarray) -> list[tuple[tuple, float, float]]:
    """Every nonzero-probability outcome branch: (bits, probability, fidelity).

    Each branch runs the pattern on one half of a maximally entangled pair
    per input, applies its frame, and compares with (1 x U)|Phi>; the
    result is 1 exactly when the corrected branch map equals U up to phase.
    """
    pattern.validate(graph)
    if len(graph.nodes) > MAX_VERIFY_NODES:
        raise CapacityError(f"{len(graph.nodes)} nodes exceed the {MAX_VERIFY_NODES}-node bound")
    u = np.asarray(target_unitary, dtype=complex)
    n_in, n_out = len(pattern.inputs), len(pattern.outputs)
    if u.shape != (2**n_out, 2**n_in):
        raise InvalidInputError("target matrix does not match inputs/outputs")
    choi = choi_input(pattern.inputs)
    d_in = 2**n_in
    ideal = np.einsum("oi,ri->ro", u, np.eye(d_in)).reshape(-1) / math.sqrt(d_in)
    start = _prepare(graph, pattern.inputs, choi)
    results = []

    def walk(state, k, bits, signals, prob):
        if k == len(pattern.steps):
            out = apply_frame(_finish(state, pattern), frame_from_signals(pattern, signals))
            f = float(abs(np.vdot(ideal, out.amps)) ** 2)
            results.append((tuple(bits), prob, f))
            return
        step = pattern.steps[k]
        basis = step_basis(step, signals)
        for bit in (0, 1):
            p, nxt = measure_out(state, step.node, basis, +1 if bit == 0 else -1)
            if p < _PROB_FLOOR:
                continue
            sig = bit ^ _parity(signals, step.flip_deps)
            walk(nxt, k + 1, bits + [bit], signals + [sig], prob * p)

    walk(start, 0, [], [], 1.0)
    return results


def verify_pattern(graph: EntanglementGraph, pattern: MeasurementPattern,
                   target_unitary: np.ndarray) -> float:
    """Worst-case corrected fidelity over all outcome branches."""
    return min(f for _, _, f in branch_fidelities(graph, pattern, target_unitary))
