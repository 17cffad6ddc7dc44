"""Three atoms share one photon through a memory cavity.

Run: python3 demos/01_ghz_memory.py
"""
# %%
import numpy as np

from atombeam import core, interactions as ix

atoms, with_cavity = ix.ghz_sequence(return_with_cavity=True)

# %% The cavity ends up empty and unentangled with the atoms.
print("Schmidt rank across the cavity cut:", core.schmidt_rank(with_cavity, ["C"]))

# %% Nonzero amplitudes of the three-atom state, one level letter per atom.
for idx in np.flatnonzero(np.abs(atoms.amps) > 1e-12):
    levels = "".join(core.ATOM_LEVELS[i] for i in np.unravel_index(idx, atoms.dims))
    print(f"  |{levels}>  {atoms.amps[idx].real:+.3f}")

# %% Under f -> 0, {e, g} -> 1 one local Hadamard turns it into (|000> + |111>)/sqrt 2.
labels = ("A1", "A2", "A3")
ghz = ix.logical_view(ix.to_ghz_frame(atoms, labels), dict(zip(labels, ix.GHZ_LOCAL_PAIRS)))
print("GHZ amplitudes:", np.round(ghz.amps.real, 3))

# %% Each single atom is maximally entangled with the other two.
for a in labels:
    print(f"Schmidt rank {a} | rest:", core.schmidt_rank(atoms, [a]))
