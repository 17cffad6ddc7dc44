"""Acceptance gate: six criteria, each timed against its runtime limit.

Every test prints one ``PASS``/``FAIL`` line straight to the terminal, so
``pytest tests/test_acceptance.py`` shows the verdicts even under output
capture.
"""

import math
import time

import numpy as np

from atombeam import chip, cluster, core, interactions as ix, mbqc, montecarlo as mc, noise
from atombeam.noise import NoiseParams

from tests import test_chip, test_cluster, test_core, test_mbqc, test_montecarlo, test_noise

F, E, G = (core.ATOM_LEVELS.index(x) for x in "feg")
S2 = 1 / math.sqrt(2)


def judge(capsys, number, limit, check):
    """Run ``check() -> (ok, detail)``, print the verdict line and assert it."""
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    in_time = elapsed < limit
    verdict = "PASS" if ok and in_time else "FAIL"
    with capsys.disabled():
        print(f"\n{verdict} criterion {number}: {detail} [{elapsed:.2f} s, limit {limit} s]")
    assert ok, detail
    assert in_time, f"took {elapsed:.1f} s, limit {limit} s"


# --- 1: dispersive CPhase ---------------------------------------------------------------


def _logical_pair(va, vb):
    a, b = np.zeros(3, complex), np.zeros(3, complex)
    a[[F, E]] = va
    b[[F, G]] = vb
    return core.from_vectors([core.atom("A"), core.atom("B")], [a, b])


def _collide(va, vb):
    out = ix.dispersive_collision(_logical_pair(va, vb), "A", "B", math.pi)
    return ix.logical_view(out, {"A": ("f", "e"), "B": ("f", "g")}).amps


def criterion_1():
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    eye = np.eye(2)
    # effective logical map, column by column
    u = np.column_stack([_collide(eye[i], eye[j]) for i in range(2) for j in range(2)])
    process = abs(np.trace(cz.conj().T @ u)) ** 2 / 16
    basis = [eye[0], eye[1]]
    sup = [np.array([S2, S2]), np.array([S2, -S2]), np.array([S2, 1j * S2]), np.array([0.6, 0.8j])]
    inputs = [(x, y) for x in basis for y in basis]
    inputs += [(sup[0], sup[0]), (sup[1], sup[2]), (sup[2], basis[1]), (sup[3], sup[0])]
    worst = min(abs(np.vdot(cz @ np.kron(x, y), _collide(x, y))) ** 2 for x, y in inputs)
    ok = process >= 1 - 1e-9 and worst >= 1 - 1e-9
    return ok, f"process fidelity {process:.12f}, worst state fidelity {worst:.12f} over 8 inputs"


def test_criterion_1_cphase(capsys):
    judge(capsys, 1, 1.0, criterion_1)


# --- 2: GHZ memory protocol ------------------------------------------------------------------


def criterion_2():
    atoms, with_cavity = ix.ghz_sequence(return_with_cavity=True)
    # psi_3 = (1/2)(|fff> + |fgf> + |efe> - |ege>), built directly
    ref = np.zeros((3, 3, 3), complex)
    ref[F, F, F] = ref[F, G, F] = ref[E, F, E] = 0.5
    ref[E, G, E] = -0.5
    permuted = core.permute(atoms, ["A1", "A2", "A3"])
    fid = abs(np.vdot(ref.ravel(), permuted.amps)) ** 2
    rank = core.schmidt_rank(with_cavity, ["C"])
    ok = fid >= 1 - 1e-9 and rank == 1
    return ok, f"fidelity with psi_3 {fid:.12f}, Schmidt rank across cavity cut {rank}"


def test_criterion_2_ghz(capsys):
    judge(capsys, 2, 1.0, criterion_2)


# --- 3: cluster verification ----------------------------------------------------------------


def criterion_3():
    checked = passed = 0
    for beams in range(1, 5):
        for cycles in range(1, 4):
            res = chip.run_physical(chip.chip_preset("lattice", beams), cycles)
            exps = cluster.stabilizer_expectations(res.state, res.graph)
            checked += len(exps)
            passed += sum(abs(v - 1) <= 1e-9 for v in exps.values())
    mismatched = []
    for kind in ("lattice", "tube", "helix"):
        for beams in range(2, 6):
            for cycles in range(1, 4):
                got = chip.emergent_graph(chip.schedule(chip.chip_preset(kind, beams), cycles))
                if got != cluster.topology_preset(kind, beams, cycles):
                    mismatched.append((kind, beams, cycles))
    ok = checked > 0 and passed == checked and not mismatched
    return ok, (f"{passed}/{checked} stabilizers pass on lattices up to 4x3; "
                f"emergent graph == preset for 36 configurations, {len(mismatched)} mismatches")


def test_criterion_3_cluster(capsys):
    judge(capsys, 3, 30.0, criterion_3)


# --- 4: MBQC CNOT ---------------------------------------------------------------------------


def criterion_4():
    g = cluster.topology_preset("lattice", 3, 3)
    p = mbqc.cnot_pattern(g)
    f_full = mbqc.verify_pattern(g, p, mbqc.CNOT)
    a, b = min(tuple(sorted(e)) for e in mbqc.restrict_pattern(p).graph.edges)
    broken = g.without_edge(a, b)
    q = mbqc.cnot_pattern(broken)
    avoids = frozenset((a, b)) not in mbqc.restrict_pattern(q).graph.edges
    f_routed = mbqc.verify_pattern(broken, q, mbqc.CNOT)
    ok = abs(f_full - 1) <= 1e-9 and abs(f_routed - 1) <= 1e-9 and avoids
    return ok, (f"worst-branch fidelity {f_full:.12f}; with bond {a}-{b} removed "
                f"{f_routed:.12f} (rerouted: {avoids})")


def test_criterion_4_cnot(capsys):
    judge(capsys, 4, 60.0, criterion_4)


# --- 5: decoherence budget --------------------------------------------------------------------


def criterion_5():
    loss = noise.coherence_loss(10e-6, 10e-3)
    mismatches = np.linspace(0, 0.05, 11)
    fids = [noise.collision_fidelity(m) for m in mismatches]
    f1 = noise.collision_fidelity(0.01)
    monotone = all(b <= a + 1e-12 for a, b in zip(fids, fids[1:]))
    ghz = mc.monte_carlo_fidelity(mc.ghz_chip(), NoiseParams.zero().replace(velocity_sigma_frac=0.005),
                                  trials=10_000, seed=0)
    scale = noise.coupling_scale(90, 40)
    checks = [abs(loss - 5.0e-4) <= 1e-6, f1 >= 0.98 and monotone, ghz.mean >= 0.99,
              abs(scale - 25.63) <= 0.01]
    return all(checks), (f"coherence loss {loss:.4e}; collision fidelity at 1% {f1:.6f} "
                         f"(monotone: {monotone}); GHZ MC {ghz.mean:.6f} +- {ghz.stderr:.1e} "
                         f"over 10^4 trials; coupling scale {scale:.4f}")


def test_criterion_5_budget(capsys):
    judge(capsys, 5, 300.0, criterion_5)


# --- 6: property suites ----------------------------------------------------------------------


def criterion_6():
    rng = np.random.default_rng(20240607)
    suites = {
        "norm preservation": [lambda: test_core.test_norm_preservation_many_random_unitaries(rng),
                              test_core.test_disjoint_unitaries_commute,
                              test_chip.test_noisy_run_is_normalised_and_seeded],
        "measurement completeness": [test_core.test_measurement_completeness_and_repeatability],
        "edge-order independence": [test_cluster.test_edge_order_independence],
        "Z-removal invariance": [test_cluster.test_z_removal_leaves_subgraph_state,
                                 test_mbqc.test_z_removal_invariance],
        "zero-noise reduction": [test_chip.test_zero_noise_reduces_to_ideal,
                                 test_montecarlo.test_zero_noise_is_perfect_and_rate_is_eta_power,
                                 test_noise.test_zero_sigma_is_nominal],
        "seeded bit-reproducibility": [
            test_noise.test_sampling_is_seeded,
            test_montecarlo.test_seeded_results_are_bit_identical_across_threads,
            test_chip.test_noise_free_runs_are_identical],
    }
    failed = []
    for name, checks in suites.items():
        try:
            for check in checks:
                check()
        except Exception as exc:  # report every suite, not just the first failure
            failed.append(f"{name} ({type(exc).__name__})")
    ok = not failed
    detail = f"{len(suites) - len(failed)}/{len(suites)} property suites green"
    return ok, detail + (f"; failing: {', '.join(failed)}" if failed else "")


def test_criterion_6_properties(capsys):
    judge(capsys, 6, 120.0, criterion_6)
