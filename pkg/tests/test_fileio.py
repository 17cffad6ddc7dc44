import json
import math

import numpy as np
import pytest

from atombeam import cluster, core, fileio, mbqc
from atombeam.cluster import QubitNode
from atombeam.errors import SchemaError
from tests.helpers import random_state

N = QubitNode


def test_state_round_trip_is_bit_exact(rng, tmp_path):
    qs = core.StateVector((core.qubit(N(0, 0)), core.qubit(N(1, 2)), core.qubit("anc")),
                          random_state(rng, 3))
    atoms = core.from_vectors([core.atom("A"), core.cavity("C", 2)],
                              [[0.6, 0.8j, 0], [1, 0, 0]])
    for s in (qs, atoms, core.empty_state()):
        path = tmp_path / "s.json"
        fileio.write(path, fileio.state_to_dict(s))
        back = fileio.read(path, "state")
        assert back.register == s.register
        np.testing.assert_array_equal(back.amps, s.amps)


def test_pattern_round_trip():
    g = cluster.topology_preset("lattice", 3, 3)
    p = mbqc.cnot_pattern(g)
    q = fileio.pattern_from_dict(json.loads(fileio.dumps(fileio.pattern_to_dict(p))))
    assert q.steps == p.steps and q.inputs == p.inputs and q.outputs == p.outputs
    assert q.graph == p.graph
    chain = mbqc.rotation_chain_pattern([0.3, -1.2, math.pi / 2])
    back = fileio.pattern_from_dict(fileio.pattern_to_dict(chain))
    assert back.steps == chain.steps
    assert mbqc.verify_pattern(back.graph, back, mbqc.chain_unitary([0.3, -1.2, math.pi / 2])) == \
        pytest.approx(1, abs=1e-9)


def test_pattern_errors_name_the_step():
    doc = fileio.pattern_to_dict(mbqc.rotation_chain_pattern([0.1, 0.2]))
    bad = json.loads(json.dumps(doc))
    bad["steps"][1]["basis"] = "Q"
    with pytest.raises(SchemaError, match="step 1"):
        fileio.pattern_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["steps"][0]["sign_deps"] = [1]
    with pytest.raises(SchemaError, match="step 0"):
        fileio.pattern_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    del bad["steps"][1]["node"]
    with pytest.raises(SchemaError, match="step 1"):
        fileio.pattern_from_dict(bad)


def test_unitary_documents():
    assert np.array_equal(fileio.unitary_from_dict({"schema_version": 1, "kind": "unitary",
                                                   "name": "CNOT"}), mbqc.CNOT)
    u = np.array([[0, 1j], [1j, 0]])
    back = fileio.unitary_from_dict(fileio.unitary_to_dict(u))
    np.testing.assert_array_equal(back, u)
    with pytest.raises(SchemaError, match="not unitary"):
        fileio.unitary_from_dict(fileio.unitary_to_dict(np.array([[1, 1], [0, 1]])))
    with pytest.raises(SchemaError, match="unknown unitary"):
        fileio.unitary_from_dict({"schema_version": 1, "kind": "unitary", "name": "TOFFOLI"})


@pytest.mark.parametrize("kind", ["state", "pattern", "unitary", "graph", "chip", "noise"])
def test_unknown_versions_rejected(kind, tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(json.dumps({"schema_version": 2, "kind": kind}))
    with pytest.raises(SchemaError):
        fileio.read(path, kind)


def test_wrong_kind_and_bad_json(tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(fileio.dumps(fileio.unitary_to_dict(mbqc.H, "H")))
    with pytest.raises(SchemaError, match="kind"):
        fileio.read(path, "state")
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        fileio.read(path, "state")


def test_labels():
    assert fileio.label_from_json(fileio.label_to_json(N(3, 7))) == N(3, 7)
    assert fileio.label_from_json("anc") == "anc"
    with pytest.raises(SchemaError):
        fileio.label_from_json([1.5, 2])
    with pytest.raises(SchemaError):
        fileio.label_to_json(4)


def test_bundled_cnot_pattern():
    p = fileio.bundled_cnot_pattern()
    assert mbqc.verify_pattern(p.graph, p, mbqc.CNOT) == pytest.approx(1, abs=1e-9)
    assert mbqc.verify_pattern(p.graph, p, mbqc.SWAP) < 1
