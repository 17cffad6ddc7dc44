import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from atombeam import cluster, core, mbqc
from atombeam.cluster import EntanglementGraph, QubitNode
from atombeam.core import BasisKind, MeasurementBasis
from atombeam.errors import CapacityError, InvalidPatternError, PlacementError
from atombeam.mbqc import MeasurementPattern, MeasurementStep
from tests.helpers import H, equal_up_to_phase, random_state

S2 = 1 / math.sqrt(2)
N = QubitNode


def input_state(nodes, vec):
    vec = np.asarray(vec, dtype=complex)
    return core.StateVector(tuple(core.qubit(n) for n in nodes), vec / np.linalg.norm(vec))


def corrected(graph, pattern, psi, bits):
    _, out, frame = mbqc.run_pattern(graph, pattern, psi, forced=bits)
    return mbqc.apply_frame(out, frame)


def all_branches(graph, pattern, psi):
    """Corrected output of every outcome branch with nonzero probability."""
    outs = []
    for k in range(2 ** len(pattern.steps)):
        bits = [(k >> i) & 1 for i in range(len(pattern.steps))]
        try:
            outs.append(corrected(graph, pattern, psi, bits))
        except ValueError:
            continue  # zero-probability branch
    return outs


# --- execution ----------------------------------------------------------------------


def test_empty_pattern_echoes_input(rng):
    a = N(0, 0)
    g = EntanglementGraph(frozenset({a}))
    psi = input_state([a], random_state(rng, 1))
    p = MeasurementPattern((), (a,), (a,))
    outcomes, out, frame = mbqc.run_pattern(g, p, psi, rng)
    assert outcomes == [] and frame.is_trivial()
    np.testing.assert_allclose(out.amps, psi.amps)


def test_one_step_teleport_is_hadamard(rng):
    v = random_state(rng, 1)
    p = mbqc.rotation_chain_pattern([0.0])
    g = p.graph
    psi = input_state([p.inputs[0]], v)
    outs = all_branches(g, p, psi)
    assert len(outs) == 2
    for out in outs:
        assert equal_up_to_phase(out.amps, H @ v)


def test_outcome_zero_is_plus_eigenstate():
    a, b = N(0, 0), N(0, 1)
    g = EntanglementGraph(frozenset({a, b}))
    p = MeasurementPattern((MeasurementStep(a, MeasurementBasis.x()),), (), (b,))
    outcomes, _, _ = mbqc.run_pattern(g, p, core.empty_state(), np.random.default_rng(0))
    assert outcomes == [0]


@pytest.mark.parametrize("angles", [[0.0], [0.3], [math.pi / 2], [-math.pi / 2], [0.0] * 4,
                                    [0.4, -1.1, 2.0], [math.pi / 2, 0.7, math.pi, -0.2, 1.0]])
def test_rotation_chain_every_branch(angles):
    p = mbqc.rotation_chain_pattern(angles)
    assert mbqc.verify_pattern(p.graph, p, mbqc.chain_unitary(angles)) == pytest.approx(1, abs=1e-9)


def test_four_zero_angles_are_identity():
    p = mbqc.rotation_chain_pattern([0.0] * 4)
    assert mbqc.verify_pattern(p.graph, p, np.eye(2)) == pytest.approx(1, abs=1e-9)


def test_y_angle_compiles_to_pauli_step():
    # a Y step turns its sign dependence into an outcome flip
    p = mbqc.rotation_chain_pattern([0.5, math.pi / 2])
    assert p.steps[1].sign_deps == frozenset() and 0 in p.steps[1].flip_deps
    q = mbqc.rotation_chain_pattern([0.5, 0.5])
    assert q.steps[1].sign_deps == {0} and 0 not in q.steps[1].flip_deps


def test_chain_needs_bonds():
    g = cluster.topology_preset("lattice", 1, 3)
    with pytest.raises(PlacementError):
        mbqc.rotation_chain_pattern([0.1, 0.2, 0.3], nodes=g.sorted_nodes(), graph=g)
    with pytest.raises(PlacementError):
        mbqc.rotation_chain_pattern([0.1], nodes=[N(0, 0), N(0, 2)], graph=g)


def test_pattern_validation():
    a, b, c = N(0, 0), N(0, 1), N(0, 2)
    with pytest.raises(InvalidPatternError, match="step 0"):
        MeasurementPattern((MeasurementStep(a, MeasurementBasis.x(), {0}),), (a,), (c,))
    with pytest.raises(InvalidPatternError, match="step 1"):
        MeasurementPattern((MeasurementStep(a, MeasurementBasis.x()),
                            MeasurementStep(a, MeasurementBasis.x())), (a,), (c,))
    with pytest.raises(InvalidPatternError):
        MeasurementPattern((MeasurementStep(c, MeasurementBasis.x()),), (a,), (c,))
    g = EntanglementGraph.from_edges([(a, b), (b, c)])
    with pytest.raises(InvalidPatternError):
        MeasurementPattern((MeasurementStep(a, MeasurementBasis.x()),), (a,), (c,), graph=g)


# --- CNOT ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def lattice_cnot():
    g = cluster.topology_preset("lattice", 3, 3)
    return g, mbqc.cnot_pattern(g)


def test_cnot_verifies(lattice_cnot):
    g, p = lattice_cnot
    assert mbqc.verify_pattern(g, p, mbqc.CNOT) == pytest.approx(1, abs=1e-9)
    assert mbqc.verify_pattern(g, p, mbqc.SWAP) < 1


@pytest.mark.parametrize("vec,expect", [
    ([0, 0, 1, 0], [0, 0, 0, 1]),
    ([1, 0, 0, 0], [1, 0, 0, 0]),
    ([S2, 0, S2, 0], [S2, 0, 0, S2]),
])
def test_cnot_on_inputs_every_branch(lattice_cnot, vec, expect):
    g, p = mbqc.restrict_pattern(lattice_cnot[1]).graph, mbqc.restrict_pattern(lattice_cnot[1])
    psi = input_state(p.inputs, vec)
    outs = all_branches(g, p, psi)
    assert outs
    for out in outs:
        assert abs(np.vdot(expect, out.amps)) ** 2 == pytest.approx(1, abs=1e-9)


def test_cnot_determinism_after_correction(lattice_cnot):
    g, p = lattice_cnot
    fids = [f for _, _, f in mbqc.branch_fidelities(g, p, mbqc.CNOT)]
    assert max(fids) - min(fids) < 1e-9
    probs = [pr for _, pr, _ in mbqc.branch_fidelities(g, p, mbqc.CNOT)]
    assert sum(probs) == pytest.approx(1)


def test_cnot_routes_around_removed_bond(lattice_cnot):
    g, p = lattice_cnot
    broken = g.without_edge(*min(tuple(sorted(e)) for e in mbqc.restrict_pattern(p).graph.edges))
    q = mbqc.cnot_pattern(broken)
    assert not (mbqc.restrict_pattern(q).graph.edges - broken.edges)
    assert mbqc.verify_pattern(broken, q, mbqc.CNOT) == pytest.approx(1, abs=1e-9)


def test_cnot_placement_fails_without_room():
    with pytest.raises(PlacementError):
        mbqc.cnot_pattern(cluster.topology_preset("lattice", 1, 3))


def test_verify_capacity():
    g = cluster.topology_preset("lattice", 4, 6)
    assert len(g.nodes) > mbqc.MAX_VERIFY_NODES
    p = mbqc.rotation_chain_pattern([0.1], nodes=[N(0, 0), N(0, 1)], graph=g)
    with pytest.raises(CapacityError):
        mbqc.verify_pattern(g, p, mbqc.H)


def test_identity_pattern_verifies():
    a = N(0, 0)
    g = EntanglementGraph(frozenset({a}))
    assert mbqc.verify_pattern(g, MeasurementPattern((), (a,), (a,)), np.eye(2)) == pytest.approx(1)


# --- properties ---------------------------------------------------------------------


@given(st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=5), st.integers(0, 2**32 - 1))
def test_frame_algebra_matches_eager_correction(angles, seed):
    rng = np.random.default_rng(seed)
    p = mbqc.rotation_chain_pattern(angles)
    nodes = p.graph.sorted_nodes()
    flow = dict(zip(nodes, nodes[1:]))
    psi = input_state([p.inputs[0]], random_state(rng, 1))
    eager = mbqc.run_pattern_eager(p.graph, p, flow, psi, rng)
    outcomes, out, frame = mbqc.run_pattern(p.graph, p, psi, rng)
    lazy = mbqc.apply_frame(out, frame)
    assert equal_up_to_phase(eager.amps, lazy.amps, 1e-9)
    assert equal_up_to_phase(lazy.amps, mbqc.chain_unitary(angles) @ psi.amps, 1e-9)


@given(st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_z_removal_invariance(angles, seed):
    rng = np.random.default_rng(seed)
    n = len(angles) + 1
    g = cluster.topology_preset("lattice", 2, 4 + 4 * (n > 3))
    wire = [N(0, k) for k in range(n)] if n <= 3 else [N(0, 0), N(0, 1), N(0, 2), N(1, 1)]
    big = mbqc.rotation_chain_pattern(angles, nodes=wire, graph=g)
    small = mbqc.rotation_chain_pattern(angles, nodes=wire,
                                        graph=EntanglementGraph.from_edges(zip(wire, wire[1:])))
    psi = input_state([wire[0]], random_state(rng, 1))
    a = mbqc.apply_frame(*mbqc.run_pattern(g, big, psi, rng)[1:])
    b = mbqc.apply_frame(*mbqc.run_pattern(small.graph, small, psi, rng)[1:])
    assert equal_up_to_phase(a.amps, b.amps, 1e-9)


def test_restricted_cnot_equals_full(lattice_cnot, rng):
    g, p = lattice_cnot
    r = mbqc.restrict_pattern(p)
    assert all(s.basis.kind is not BasisKind.Z for s in r.steps)
    assert mbqc.verify_pattern(r.graph, r, mbqc.CNOT) == pytest.approx(1, abs=1e-9)
    psi = input_state(p.inputs, random_state(rng, 2))
    a = mbqc.apply_frame(*mbqc.run_pattern(g, p, psi, rng)[1:])
    b = mbqc.apply_frame(*mbqc.run_pattern(r.graph, r, psi, rng)[1:])
    assert equal_up_to_phase(a.amps, b.amps, 1e-9)
