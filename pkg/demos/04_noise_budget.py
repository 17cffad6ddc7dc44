"""How much each imperfection costs, from closed forms and Monte Carlo.

Run: python3 demos/04_noise_budget.py   (under a minute)
"""
# %%
import numpy as np

from atombeam import montecarlo as mc, noise
from atombeam.noise import NoiseParams

print(f"field coherence lost between atoms (10 us, 10 ms): {noise.coherence_loss(1e-5, 1e-2):.3%}")
print(f"n=90 vs n=40 coupling: x{noise.coupling_scale(90, 40):.2f}")
print(f"cavity lifetime at Q=5e10, 26.5 GHz: {noise.cavity_lifetime(5e10, 26.5e9):.2f} s")

# %% Collision timing: fidelity against the fraction of overlap lost.
for m in (0.0, 0.005, 0.01, 0.02, 0.05):
    print(f"  mismatch {m:5.3f}: {noise.collision_fidelity(m):.5f}")

# %% Velocity spread alone on one GHZ pulse.
quiet = NoiseParams.zero()
r = mc.monte_carlo_fidelity(mc.ghz_chip(), quiet.replace(velocity_sigma_frac=0.005), trials=2000, seed=0)
print(f"GHZ pulse at 0.5% velocity spread: {r.mean:.5f} +- {r.stderr:.1e}")

# %% Emission jitter on a single collision.
r = mc.monte_carlo_fidelity(mc.collision_chip(), quiet.replace(emission_jitter_sigma=1e-8),
                            trials=2000, seed=0, n_cycles=2)
print(f"one collision, 10 ns jitter over 1 us overlap: {r.mean:.5f} (heralded {r.heralded_rate:.4f})")

# %% Photon loss from the memory cavity at a 10 ms lifetime: rare, but fatal when it happens.
r = mc.monte_carlo_fidelity(mc.ghz_chip(), quiet.replace(t_cav=1e-2), trials=10_000, seed=3)
print(f"GHZ pulse, cavity decay only: {r.mean:.5f} +- {r.stderr:.1e}")

# %% Everything at the default values, with realistic detectors.
r = mc.monte_carlo_fidelity(mc.ghz_chip(), NoiseParams(), trials=2000, seed=0)
print(f"GHZ pulse, default noise: {r.mean:.5f}, heralded rate {r.heralded_rate:.3f} "
      f"(detector limit eta^3 = {NoiseParams().eta ** 3:.3f})")

# %% A sweep as the CLI writes it.
rows = mc.sweep("velocity_sigma_frac", np.linspace(0, 0.02, 5), quiet, trials=500, seed=1)
print(mc.format_table(rows))
