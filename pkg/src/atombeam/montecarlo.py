"""Monte Carlo fidelity estimates and parameter sweeps.

Every trial owns an independent generator spawned from the master seed
with :class:`numpy.random.SeedSequence`, so results do not depend on the
number of worker threads or on the order trials finish.

Detection is folded in analytically: a trial is heralded when every atom
is found in its working pair by detectors of efficiency ``eta_detect *
eta_ionize``.  Each trial therefore carries the weight
``eta**n_atoms * (1 - leaked)``; the reported mean fidelity is the
weighted mean and the heralded rate is the mean weight.  A trial whose
source left a pulse empty never matches the target and gets weight 0.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import chip, cluster, core, noise as noise_mod
from .core import StateVector
from .errors import CapacityError, ContractViolation, InvalidInputError

GHZ_CYCLES = 3


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    heralded_rate: float
    trials: int

    def __iter__(self):
        return iter((self.mean, self.stderr, self.heralded_rate))


def trial_rngs(seed, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _target_nodes(target) -> set:
    if isinstance(target, cluster.EntanglementGraph):
        return set(target.nodes)
    return set(target.labels)


def _fidelity(state: StateVector, target) -> float:
    if isinstance(target, cluster.EntanglementGraph):
        return chip.overlap_fidelity(state, target)
    ordered = core.permute(state, target.labels)
    return float(min(1.0, abs(np.vdot(target.amps, ordered.amps)) ** 2))


def run_trial(config: chip.ChipConfig, params: noise_mod.NoiseParams, target, n_cycles: int,
              rng: np.random.Generator) -> tuple[float, float]:
    """One noisy run; returns (herald weight, fidelity against ``target``)."""
    timeline = chip.schedule(config, n_cycles, params, rng)
    nodes = timeline.present_nodes()
    if set(nodes) != _target_nodes(target):
        return 0.0, 0.0
    res = chip.run_physical(config, n_cycles, params, rng, timeline=timeline)
    if abs(res.state.norm() - 1) > 1e-9:
        raise ContractViolation("noisy trial produced an unnormalised state")
    weight = params.eta ** len(nodes) * (1.0 - res.leaked)
    return weight, (_fidelity(res.state, target) if nodes else 1.0)


def monte_carlo_fidelity(config: chip.ChipConfig, params: noise_mod.NoiseParams, target=None,
                         trials: int = 1000, seed=0, *, n_cycles: int = GHZ_CYCLES,
                         threads: int = 1) -> MonteCarloResult:
    """Estimate the heralded fidelity of ``config`` under ``params``.

    ``target`` is an :class:`EntanglementGraph` or an all-qubit
    :class:`StateVector`; by default the noise-free emergent graph.
    Returns (mean fidelity, standard error, heralded rate).
    """
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    nominal = chip.schedule(config, n_cycles)
    n = len(nominal.present_nodes())
    if n > cluster.MAX_GRAPH_NODES:
        raise CapacityError(f"{n} atoms exceed the state-vector bound of {cluster.MAX_GRAPH_NODES}")
    if target is None:
        target = chip.emergent_graph(nominal)
    rngs = trial_rngs(seed, trials)

    def one(rng):
        return run_trial(config, params, target, n_cycles, rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, rngs))
    else:
        out = [one(r) for r in rngs]
    w = np.array([o[0] for o in out])
    f = np.array([o[1] for o in out])
    total = w.sum()
    if total == 0:
        return MonteCarloResult(math.nan, math.nan, 0.0, trials)
    mean = float(np.dot(w, f) / total)
    stderr = float(math.sqrt(np.dot(w**2, (f - mean) ** 2)) / total)
    return MonteCarloResult(mean, stderr, float(total / trials), trials)


# --- sweeps ----------------------------------------------------------------------


def parse_range(text: str) -> np.ndarray:
    """'a:b:n' -> n evenly spaced values from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise InvalidInputError(f"range must look like a:b:n, got {text!r}") from exc
    if n < 1:
        raise InvalidInputError("range needs at least one point")
    return np.linspace(a, b, n)


def ghz_chip() -> chip.ChipConfig:
    return chip.chip_preset("lattice", 1)


def collision_chip() -> chip.ChipConfig:
    """Two crossing beams without memory cavities: one isolated collision."""
    return chip.chip_preset("lattice", 2).with_memory(0, False).with_memory(1, False)


def sweep(param: str, values, base: noise_mod.NoiseParams | None = None,
          config: chip.ChipConfig | None = None, *, n_cycles: int = GHZ_CYCLES,
          trials: int = 1000, seed=0, threads: int = 1) -> list[dict]:
    """Fidelity rows for ``param`` swept over ``values``.

    Every point reuses the same trial seeds, so the perturbation draws are
    common across the sweep and differences come from the parameter alone.
    """
    if param not in noise_mod.NOISE_PARAM_NAMES:
        raise InvalidInputError(
            f"unknown noise parameter {param!r}; valid: {', '.join(noise_mod.NOISE_PARAM_NAMES)}")
    base = base if base is not None else noise_mod.NoiseParams()
    config = config if config is not None else ghz_chip()
    rows = []
    for v in values:
        p = base.replace(**{param: float(v)})
        r = monte_carlo_fidelity(config, p, trials=trials, seed=seed, n_cycles=n_cycles,
                                 threads=threads)
        rows.append({"kind": "sweep", "param": param, "value": float(v), "mean_fidelity": r.mean,
                     "stderr": r.stderr, "heralded_rate": r.heralded_rate, "trials": trials})
    return rows


def headline_rows(trials: int = 1000, seed=0, threads: int = 1) -> list[dict]:
    """The three budget figures: cavity coherence, collision timing, GHZ velocity spread."""
    quiet = noise_mod.NoiseParams.zero()
    ghz = monte_carlo_fidelity(ghz_chip(), quiet.replace(velocity_sigma_frac=0.005),
                               trials=trials, seed=seed, threads=threads)
    return [
        {"kind": "headline", "param": "cavity_coherence_loss", "value": 1e-5,
         "mean_fidelity": 1 - noise_mod.coherence_loss(1e-5, 1e-2), "stderr": 0.0,
         "heralded_rate": "", "trials": ""},
        {"kind": "headline", "param": "collision_arrival_mismatch", "value": 0.01,
         "mean_fidelity": noise_mod.collision_fidelity(0.01), "stderr": 0.0,
         "heralded_rate": "", "trials": ""},
        {"kind": "headline", "param": "ghz_velocity_sigma_frac", "value": 0.005,
         "mean_fidelity": ghz.mean, "stderr": ghz.stderr, "heralded_rate": ghz.heralded_rate,
         "trials": trials},
    ]


COLUMNS = ("kind", "param", "value", "mean_fidelity", "stderr", "heralded_rate", "trials")


def format_table(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
