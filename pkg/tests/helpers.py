"""Small independent oracles shared by the test modules."""

import numpy as np

from atombeam import core

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def qubits(*labels):
    return tuple(core.qubit(l) for l in labels)


def state(labels, vec):
    vec = np.asarray(vec, dtype=complex)
    return core.StateVector(qubits(*labels), vec / np.linalg.norm(vec))


def random_state(rng, n_qubits):
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return v / np.linalg.norm(v)


def haar_unitary(rng, d):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def kron_all(mats):
    out = np.ones(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def equal_up_to_phase(a, b, tol=1e-9):
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < tol
