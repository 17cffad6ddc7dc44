"""Crossed-beam cavity-QED cluster-state chip: simulator and MBQC toolkit.

Submodules
----------
core          mixed-dimension state vectors, operators, measurement
interactions  atom-cavity and atom-atom gate set, three-atom memory protocol
cluster       entanglement graphs, ideal graph states, topology presets
mbqc          measurement patterns, feed-forward execution, verification
chip          chip configuration, scheduler, physical simulation
noise         noise parameters, channels, budget terms
montecarlo    Monte Carlo fidelity and parameter sweeps
fileio        versioned JSON file formats
cli           command-line entry point
"""

from .errors import (AtomBeamError, CapacityError, ContractViolation, InvalidInputError,
                     InvalidPatternError, MeasurementBasisUndefined, PlacementError,
                     SchemaError, TruncationError, UnsupportedRegimeError)

__version__ = "0.1.0"

__all__ = [
    "AtomBeamError", "CapacityError", "ContractViolation", "InvalidInputError",
    "InvalidPatternError", "MeasurementBasisUndefined", "PlacementError", "SchemaError",
    "TruncationError", "UnsupportedRegimeError", "__version__",
]
