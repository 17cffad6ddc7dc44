"""Exception hierarchy shared by every module."""


class AtomBeamError(Exception):
    """Base class for all package errors."""


class InvalidInputError(AtomBeamError, ValueError):
    """Malformed argument: unknown label, index out of range, bad size."""


class ContractViolation(AtomBeamError, ValueError):
    """An operator or state broke a documented invariant (e.g. non-unitary)."""


class MeasurementBasisUndefined(AtomBeamError, ValueError):
    """Amplitude sits outside the level pair a measurement is defined on."""


class TruncationError(AtomBeamError, ValueError):
    """An operation would push amplitude above the cavity Fock cutoff."""


class UnsupportedRegimeError(AtomBeamError, ValueError):
    """Operation applied outside the regime its model covers."""


class CapacityError(AtomBeamError):
    """Brute-force simulation bound exceeded."""


class InvalidPatternError(AtomBeamError, ValueError):
    """Measurement pattern violates its ordering or membership rules."""


class PlacementError(AtomBeamError):
    """No region of the topology supports the requested pattern."""


class SchemaError(AtomBeamError, ValueError):
    """A serialized file has the wrong shape or an unknown schema version."""
