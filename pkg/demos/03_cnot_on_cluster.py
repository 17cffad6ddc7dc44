"""A CNOT placed on a chip-grown cluster, checked over every measurement branch.

Run: python3 demos/03_cnot_on_cluster.py
"""
# %%
import numpy as np

from atombeam import cluster, core, mbqc

graph = cluster.topology_preset("lattice", 3, 3)
pattern = mbqc.cnot_pattern(graph)
core_pattern = mbqc.restrict_pattern(pattern)
print("CNOT uses", len(core_pattern.graph.nodes), "qubits; the other",
      len(graph.nodes) - len(core_pattern.graph.nodes), "are measured out in Z")
print("inputs:", [str(n) for n in pattern.inputs], "outputs:", [str(n) for n in pattern.outputs])

# %% Worst case over all outcome branches after Pauli-frame correction.
print("fidelity vs CNOT:", mbqc.verify_pattern(graph, pattern, mbqc.CNOT))
print("fidelity vs SWAP:", mbqc.verify_pattern(graph, pattern, mbqc.SWAP))

# %% One random run on |1>|0>.
psi = core.StateVector(tuple(core.qubit(n) for n in pattern.inputs), np.array([0, 0, 1, 0], complex))
outcomes, out, frame = mbqc.run_pattern(graph, pattern, psi, np.random.default_rng(7))
print("outcomes:", outcomes)
print("corrected output:", np.round(mbqc.apply_frame(out, frame).amps, 6))

# %% Remove a bond the gate was using; placement finds another spot.
a, b = min(tuple(sorted(e)) for e in core_pattern.graph.edges)
broken = graph.without_edge(a, b)
rerouted = mbqc.cnot_pattern(broken)
print(f"without {a}-{b}: fidelity", mbqc.verify_pattern(broken, rerouted, mbqc.CNOT))
