"""JSON file formats for states, patterns, unitaries, graphs and chips.

Every document carries ``schema_version`` and ``kind``; anything else is
rejected with :class:`~atombeam.errors.SchemaError`.  Node labels are
written as ``[beamline, cycle]`` pairs, other labels as strings.
Amplitudes are ``[re, im]`` pairs in shortest round-trip float form, so a
state survives a write/read cycle bit for bit.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from . import chip, cluster, core, mbqc, noise
from .cluster import QubitNode
from .core import BasisKind, MeasurementBasis, StateVector
from .errors import AtomBeamError, SchemaError

SCHEMA_VERSION = 1
NAMED_UNITARIES = {"CNOT": mbqc.CNOT, "SWAP": mbqc.SWAP, "H": mbqc.H,
                   "I": np.eye(2, dtype=complex), "CZ": cluster.CZ}


def _check(data, kind: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError(f"expected a {kind} document object")
    if data.get("kind") != kind:
        raise SchemaError(f"expected kind {kind!r}, got {data.get('kind')!r}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported {kind} schema_version {data.get('schema_version')!r}")


def label_to_json(label):
    if isinstance(label, QubitNode):
        return [label.beamline, label.cycle]
    if isinstance(label, str):
        return label
    raise SchemaError(f"label {label!r} has no file representation")


def label_from_json(obj):
    if isinstance(obj, str):
        return obj
    if isinstance(obj, list) and len(obj) == 2 and all(isinstance(x, int) for x in obj):
        return QubitNode(obj[0], obj[1])
    raise SchemaError(f"bad label {obj!r}")


def _complex_list(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def _complex_array(obj) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"amplitudes must be [re, im] pairs: {exc}") from exc
    if arr.shape[-1:] != (2,):
        raise SchemaError("amplitudes must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# --- states ----------------------------------------------------------------------


def state_to_dict(state: StateVector) -> dict:
    subsystems = []
    for s in state.register:
        entry = {"label": label_to_json(s.label), "kind": s.kind.value, "dim": s.dim}
        if s.levels is not None:
            entry["levels"] = list(s.levels)
        subsystems.append(entry)
    return {"schema_version": SCHEMA_VERSION, "kind": "state", "subsystems": subsystems,
            "amplitudes": _complex_list(state.amps)}


def state_from_dict(data: dict) -> StateVector:
    _check(data, "state")
    try:
        specs = []
        for e in data["subsystems"]:
            label = label_from_json(e["label"])
            kind = core.Kind(e.get("kind", "qubit"))
            levels = tuple(e["levels"]) if e.get("levels") is not None else None
            specs.append(core.SubsystemSpec(label, kind, int(e["dim"]), levels))
        amps = _complex_array(data["amplitudes"])
        return StateVector(tuple(specs), amps)
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, AtomBeamError) as exc:
        raise SchemaError(f"malformed state document: {exc}") from exc


# --- patterns --------------------------------------------------------------------


def _basis_to_json(b: MeasurementBasis) -> dict:
    out = {"basis": b.kind.value}
    if b.kind is BasisKind.B:
        out["alpha"] = b.alpha
    return out


def _basis_from_json(entry: dict, k: int) -> MeasurementBasis:
    kind = entry.get("basis")
    if kind == "X":
        return MeasurementBasis.x()
    if kind == "Y":
        return MeasurementBasis.y()
    if kind == "Z":
        return MeasurementBasis.z()
    if kind == "B":
        try:
            return MeasurementBasis.b(float(entry["alpha"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"step {k}: B basis needs a numeric alpha") from exc
    raise SchemaError(f"step {k}: unknown basis {kind!r}")


def pattern_to_dict(pattern: mbqc.MeasurementPattern) -> dict:
    def corr(m):
        return [{"node": label_to_json(o), "deps": sorted(d)} for o, d in m.items() if d]

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "pattern",
        "graph": cluster.graph_to_dict(pattern.graph) if pattern.graph is not None else None,
        "inputs": [label_to_json(n) for n in pattern.inputs],
        "outputs": [label_to_json(n) for n in pattern.outputs],
        "steps": [{"node": label_to_json(s.node), **_basis_to_json(s.basis),
                   "sign_deps": sorted(s.sign_deps), "flip_deps": sorted(s.flip_deps)}
                  for s in pattern.steps],
        "x_corrections": corr(pattern.x_corrections),
        "z_corrections": corr(pattern.z_corrections),
    }


def pattern_from_dict(data: dict) -> mbqc.MeasurementPattern:
    _check(data, "pattern")
    steps = []
    for k, e in enumerate(data.get("steps", [])):
        if not isinstance(e, dict) or "node" not in e:
            raise SchemaError(f"step {k}: missing node")
        try:
            deps = (frozenset(int(d) for d in e.get("sign_deps", [])),
                    frozenset(int(d) for d in e.get("flip_deps", [])))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"step {k}: dependencies must be step indices") from exc
        steps.append(mbqc.MeasurementStep(label_from_json(e["node"]), _basis_from_json(e, k), *deps))
    try:
        graph = cluster.graph_from_dict(data["graph"]) if data.get("graph") else None
        inputs = [label_from_json(n) for n in data.get("inputs", [])]
        outputs = [label_from_json(n) for n in data.get("outputs", [])]
        xs = {label_from_json(c["node"]): c["deps"] for c in data.get("x_corrections", [])}
        zs = {label_from_json(c["node"]): c["deps"] for c in data.get("z_corrections", [])}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed pattern document: {exc}") from exc
    try:
        return mbqc.MeasurementPattern(tuple(steps), tuple(inputs), tuple(outputs), xs, zs, graph)
    except AtomBeamError as exc:
        raise SchemaError(f"invalid pattern: {exc}") from exc


# --- unitaries -------------------------------------------------------------------


def unitary_to_dict(matrix: np.ndarray, name: str | None = None) -> dict:
    d = {"schema_version": SCHEMA_VERSION, "kind": "unitary"}
    if name is not None:
        d["name"] = name
    else:
        m = np.asarray(matrix, dtype=complex)
        d["matrix"] = [_complex_list(row) for row in m]
    return d


def unitary_from_dict(data: dict) -> np.ndarray:
    _check(data, "unitary")
    if "name" in data:
        try:
            return NAMED_UNITARIES[data["name"]].copy()
        except KeyError as exc:
            raise SchemaError(f"unknown unitary {data['name']!r}; known: {sorted(NAMED_UNITARIES)}") from exc
    if "matrix" not in data:
        raise SchemaError("unitary document needs a name or a matrix")
    m = _complex_array(data["matrix"])
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SchemaError("matrix must be square")
    if not core.is_unitary(m, 1e-9):
        raise SchemaError("matrix is not unitary")
    return m


# --- generic file helpers ---------------------------------------------------------


_READERS = {
    "state": state_from_dict,
    "pattern": pattern_from_dict,
    "unitary": unitary_from_dict,
    "graph": cluster.graph_from_dict,
    "chip": chip.config_from_dict,
    "noise": noise.NoiseParams.from_dict,
}


def dumps(data: dict) -> str:
    return json.dumps(data, indent=1) + "\n"


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def read(path, kind: str):
    """Load and decode a document of the given ``kind``."""
    return _READERS[kind](load_json(path))


def write(path, data: dict) -> None:
    Path(path).write_text(dumps(data))


def bundled_cnot_pattern() -> mbqc.MeasurementPattern:
    text = resources.files("atombeam.data").joinpath("cnot_pattern.json").read_text()
    return pattern_from_dict(json.loads(text))
