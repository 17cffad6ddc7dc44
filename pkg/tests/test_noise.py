import math

import numpy as np
import pytest

from atombeam import core, noise
from atombeam.errors import InvalidInputError, SchemaError
from atombeam.noise import AtomNoise, NoiseParams


# --- closed-form budget terms ------------------------------------------------------------


def test_coherence_loss_examples():
    assert noise.coherence_loss(0.0, 3.0) == 0.0
    assert noise.coherence_loss(2 * math.log(2) * 0.01, 0.01) == pytest.approx(0.5, abs=1e-15)
    # frozen from 1 - exp(-1e-5 / 2e-2)
    assert noise.coherence_loss(1e-5, 1e-2) == pytest.approx(4.99875e-4, abs=1e-9)
    with pytest.raises(InvalidInputError):
        noise.coherence_loss(-1, 1)
    with pytest.raises(InvalidInputError):
        noise.coherence_loss(1, 0)


def test_coupling_scale_examples():
    assert noise.coupling_scale(7, 7) == 1
    assert noise.coupling_scale(2, 1) == 16
    assert noise.coupling_scale(90, 40) == pytest.approx(25.6289, abs=1e-4)
    with pytest.raises(InvalidInputError):
        noise.coupling_scale(0, 4)


def test_cavity_lifetime_examples():
    assert noise.cavity_lifetime(5e10, 26.5e9) == pytest.approx(0.300, abs=0.003)
    assert noise.cavity_lifetime(5e8, 21.5e9) == pytest.approx(3.70e-3, abs=0.01e-3)
    assert noise.cavity_lifetime(2e9, 1e9) == pytest.approx(2 * noise.cavity_lifetime(1e9, 1e9))
    regime = noise.PhysicalRegime(90, 5e8, 21.5e9)
    assert regime.lifetime == noise.cavity_lifetime(5e8, 21.5e9)
    assert regime.coupling_relative_to(noise.PhysicalRegime(40, 1, 1)) == pytest.approx(25.63, abs=0.01)
    with pytest.raises(InvalidInputError):
        noise.PhysicalRegime(0, 1, 1)


# --- parameters -------------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(InvalidInputError):
        NoiseParams(eta_detect=1.5)
    with pytest.raises(InvalidInputError):
        NoiseParams(t_cav=0)
    with pytest.raises(InvalidInputError):
        NoiseParams(velocity_sigma_frac=-0.1)
    assert NoiseParams().eta == pytest.approx(0.8 * 0.98)


def test_params_round_trip():
    for p in (NoiseParams(), NoiseParams.zero(), NoiseParams(stray_dephasing_rate=3.0)):
        assert NoiseParams.from_dict(p.to_dict()) == p
    with pytest.raises(SchemaError):
        NoiseParams.from_dict({**NoiseParams().to_dict(), "schema_version": 2})
    with pytest.raises(SchemaError, match="bogus"):
        NoiseParams.from_dict({**NoiseParams().to_dict(), "bogus": 1})


# --- sampling ---------------------------------------------------------------------------


def test_zero_sigma_is_nominal():
    samples = noise.sample_run_noise(NoiseParams.zero(), 50, np.random.default_rng(0))
    for s in samples.values():
        assert s == AtomNoise(1.0, NoiseParams().transit_time, 1.0, 0.0)


def test_velocity_spread_statistics():
    samples = noise.sample_run_noise(NoiseParams(), 100_000, np.random.default_rng(5))
    v = np.array([s.velocity_factor for s in samples.values()])
    # truncation at 3 sigma shrinks the std by about 1.4%
    assert np.std(v) == pytest.approx(0.005, abs=0.0002)
    assert np.max(np.abs(v - 1)) <= 3 * 0.005 + 1e-15
    t = np.array([s.emission_offset for s in samples.values()])
    assert np.max(np.abs(t - 1e-8)) <= 3e-8 + 1e-20


def test_sampling_is_seeded():
    a = noise.sample_run_noise(NoiseParams(), 200, np.random.default_rng(9))
    b = noise.sample_run_noise(NoiseParams(), 200, np.random.default_rng(9))
    assert a == b


def test_truncated_normal_bound():
    z = noise.truncated_normal(np.random.default_rng(1), 200_000, cut=1.0)
    assert np.max(np.abs(z)) <= 1.0
    assert len(z) == 200_000


def test_area_scale_is_inverse_velocity():
    assert AtomNoise(velocity_factor=1.02).area_scale == pytest.approx(1 / 1.02)


# --- collision timing ---------------------------------------------------------------------


def test_collision_fidelity_examples():
    assert noise.collision_fidelity(0.0) == pytest.approx(1, abs=1e-9)
    assert noise.collision_fidelity(0.01) >= 0.98
    with pytest.raises(InvalidInputError):
        noise.collision_fidelity(-0.1)


def test_collision_fidelity_monotone():
    f = [noise.collision_fidelity(m) for m in np.linspace(0, 0.05, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(f, f[1:]))


def test_collision_lambda_t_nominal_is_pi():
    n = AtomNoise()
    assert noise.collision_lambda_t(n, n, NoiseParams()) == pytest.approx(math.pi)
    late = AtomNoise(emission_offset=n.emission_offset + 2e-8)
    assert noise.arrival_mismatch(n, late, NoiseParams()) == pytest.approx(0.02)
    assert noise.collision_lambda_t(n, late, NoiseParams()) == pytest.approx(0.98 * math.pi)


# --- channels -------------------------------------------------------------------------------


def cavity_plus():
    c = core.cavity("C", 1)
    return core.from_vectors([c], [[1 / math.sqrt(2), 1 / math.sqrt(2)]])


def test_cavity_decay_limits():
    s = cavity_plus()
    rng = np.random.default_rng(0)
    assert noise.cavity_decay(s, "C", 1e-5, math.inf, rng) == (s, False)
    assert noise.cavity_decay(s, "C", 0.0, 1e-2, rng) == (s, False)


def test_cavity_decay_trajectory_average():
    # averaging the trajectories reproduces the amplitude-damping channel
    s, t, tc = cavity_plus(), 0.7, 1.0
    rng = np.random.default_rng(4)
    rho = np.zeros((2, 2), complex)
    n = 4000
    for _ in range(n):
        out, _ = noise.cavity_decay(s, "C", t, tc, rng)
        v = out.amps / np.linalg.norm(out.amps)
        rho += np.outer(v, v.conj()) / n
    gamma = 1 - math.exp(-t / tc)
    assert rho[1, 1].real == pytest.approx(0.5 * (1 - gamma), abs=0.02)
    assert abs(rho[0, 1]) == pytest.approx(0.5 * math.exp(-t / (2 * tc)), abs=0.02)


def test_stray_dephase():
    a = core.from_vectors([core.atom("A")], [[1 / math.sqrt(2), 1 / math.sqrt(2), 0]])
    assert noise.stray_dephase(a, "A", 0.0) is a
    out = noise.stray_dephase(a, "A", 0.3)
    assert out.amps[1] / out.amps[0] == pytest.approx(np.exp(0.3j))
