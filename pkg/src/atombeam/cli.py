"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 capacity exceeded,
3 schema error.  The default seed comes from ``$ATOMBEAM_SEED`` (else 0).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import chip, cluster, fileio, mbqc, montecarlo, noise
from .errors import AtomBeamError, CapacityError, SchemaError

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY, EXIT_SCHEMA = 0, 1, 2, 3
SEED_ENV = "ATOMBEAM_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the capacity code
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- chip ------------------------------------------------------------------------


def cmd_chip_preset(args) -> int:
    config = chip.chip_preset(args.kind, args.beams)
    if args.cycles < 1:
        raise UsageError("cycles must be at least 1")
    doc = chip.config_to_dict(config)
    doc["cycles"] = args.cycles
    g = chip.emergent_graph(chip.schedule(config, args.cycles))
    _emit(fileio.dumps(doc), args.out)
    print(f"{args.kind} {args.beams}x{args.cycles}: {len(g.nodes)} data nodes, {len(g.edges)} bonds",
          file=sys.stderr)
    return EXIT_OK


def cmd_chip_validate(args) -> int:
    config = fileio.read(args.file, "chip")
    diags = chip.validate_chip(config)
    for d in diags:
        print(d)
    if diags:
        return EXIT_INVALID
    print("ok: no diagnostics")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------------


def cmd_simulate(args) -> int:
    doc = fileio.load_json(args.config)
    config = chip.config_from_dict(doc)
    cycles = args.cycles if args.cycles is not None else doc.get("cycles")
    if cycles is None:
        raise UsageError("--cycles is required when the config does not record one")
    seed = _seed(args)
    params = None if args.noise == "off" else fileio.read(args.noise, "noise")
    rng = np.random.default_rng(seed)
    timeline = chip.schedule(config, cycles, params, rng)
    result = chip.run_physical(config, cycles, params, rng, timeline=timeline)
    graph = result.graph

    lines = [f"seed: {seed}", f"atoms: {len(graph.nodes)}", f"bonds: {len(graph.edges)}",
             f"collisions: {len(timeline.collisions)}"]
    if graph.nodes:
        exps = cluster.stabilizer_expectations(result.state, graph)
        n_pass = sum(abs(v - 1) <= 1e-9 for v in exps.values())
        lines.append(f"stabilizers: {n_pass}/{len(exps)} pass")
        lines.append(f"graph-state fidelity: {chip.overlap_fidelity(result.state, graph):.9f}")
    else:
        lines.append("stabilizers: 0/0 pass")
    if params is not None:
        lines.append(f"leaked weight: {result.leaked:.3e}")
        lines.append(f"cavity photon losses: {result.cavity_jumps}")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"schema_version": fileio.SCHEMA_VERSION, "kind": "manifest",
                    "command": "simulate", "config": str(args.config), "cycles": cycles,
                    "noise": args.noise, "seed": seed, "output_dir": str(out)}
        fileio.write(out / "manifest.json", manifest)
        state_doc = fileio.state_to_dict(result.state)
        state_doc["seed"] = seed
        fileio.write(out / "state.json", state_doc)
        graph_doc = cluster.graph_to_dict(graph)
        graph_doc["seed"] = seed
        fileio.write(out / "graph.json", graph_doc)
        (out / "graph.dot").write_text(cluster.to_dot(graph))
        log = [f"# seed {seed}", "# time type beamline cycle role"]
        log += [f"{t:.9e} {kind} {b} {c} {role}" for t, kind, b, c, role in timeline.event_log()]
        (out / "timeline.log").write_text("\n".join(log) + "\n")
        (out / "report.txt").write_text(report)
    return EXIT_OK


# --- mbqc ---------------------------------------------------------------------------


def _pattern_graph(pattern: mbqc.MeasurementPattern) -> cluster.EntanglementGraph:
    if pattern.graph is not None:
        return pattern.graph
    if pattern.steps:
        raise SchemaError("pattern file has steps but no graph")
    return cluster.EntanglementGraph(frozenset(pattern.outputs))


def _load_pattern(path: str) -> mbqc.MeasurementPattern:
    if path == "bundled:cnot":
        return fileio.bundled_cnot_pattern()
    return fileio.read(path, "pattern")


def cmd_mbqc_run(args) -> int:
    pattern = _load_pattern(args.pattern)
    graph = _pattern_graph(pattern)
    state = fileio.read(args.input, "state")
    rng = np.random.default_rng(_seed(args))
    outcomes, out_state, frame = mbqc.run_pattern(graph, pattern, state, rng)
    corrected = mbqc.apply_frame(out_state, frame)
    print("outcomes: " + " ".join(str(b) for b in outcomes))
    print("frame x: " + " ".join(f"{o}={frame.x[o]}" for o in pattern.outputs))
    print("frame z: " + " ".join(f"{o}={frame.z[o]}" for o in pattern.outputs))
    text = fileio.dumps(fileio.state_to_dict(corrected))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_mbqc_verify(args) -> int:
    pattern = _load_pattern(args.pattern)
    graph = _pattern_graph(pattern)
    target = args.target
    if target in fileio.NAMED_UNITARIES:
        u = fileio.NAMED_UNITARIES[target]
    else:
        u = fileio.read(target, "unitary")
    f = mbqc.verify_pattern(graph, pattern, u)
    print(f"worst-case fidelity: {f:.9f}")
    return EXIT_OK


# --- noise --------------------------------------------------------------------------


def cmd_noise_sweep(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    values = montecarlo.parse_range(args.range)
    base = fileio.read(args.base, "noise") if args.base else noise.NoiseParams()
    seed = _seed(args)
    if args.config:
        doc = fileio.load_json(args.config)
        config = chip.config_from_dict(doc)
        cycles = args.cycles or doc.get("cycles") or montecarlo.GHZ_CYCLES
    else:
        config, cycles = montecarlo.ghz_chip(), args.cycles or montecarlo.GHZ_CYCLES
    rows = montecarlo.sweep(args.param, values, base, config, n_cycles=cycles,
                            trials=args.trials, seed=seed, threads=args.threads)
    if not args.no_headline:
        rows += montecarlo.headline_rows(trials=args.trials, seed=seed, threads=args.threads)
    text = f"# seed={seed}\n" + montecarlo.format_table(rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_graph(args) -> int:
    g = cluster.topology_preset(args.kind, args.beams, args.cycles)
    text = cluster.to_dot(g) if args.format == "dot" else cluster.graph_to_text(g)
    _emit(text, args.out)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    kinds = [t.value for t in cluster.Topology]
    p = _Parser(prog="atombeam", description="Crossed-beam cluster-state chip simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pc = sub.add_parser("chip", help="chip configurations")
    csub = pc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pp = csub.add_parser("preset", help="write a preset configuration")
    pp.add_argument("kind", choices=kinds)
    pp.add_argument("beams", type=int)
    pp.add_argument("cycles", type=int)
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_chip_preset)
    pv = csub.add_parser("validate", help="print configuration diagnostics")
    pv.add_argument("file")
    pv.set_defaults(func=cmd_chip_validate)

    ps = sub.add_parser("simulate", help="run the chip and check the cluster state")
    ps.add_argument("config")
    ps.add_argument("--cycles", type=int)
    ps.add_argument("--noise", default="off", help="'off' or a noise parameter file")
    ps.add_argument("--seed", type=int)
    ps.add_argument("--out", help="directory for state, graph, timeline and report files")
    ps.set_defaults(func=cmd_simulate)

    pm = sub.add_parser("mbqc", help="measurement patterns")
    msub = pm.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pr = msub.add_parser("run", help="execute a pattern once")
    pr.add_argument("pattern", help="pattern file, or bundled:cnot")
    pr.add_argument("--input", required=True, help="input state file")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_mbqc_run)
    pver = msub.add_parser("verify", help="worst-case fidelity over all outcome branches")
    pver.add_argument("pattern", help="pattern file, or bundled:cnot")
    pver.add_argument("--target", required=True,
                      help=f"unitary file or one of {', '.join(sorted(fileio.NAMED_UNITARIES))}")
    pver.set_defaults(func=cmd_mbqc_verify)

    pn = sub.add_parser("noise", help="noise studies")
    nsub = pn.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pw = nsub.add_parser("sweep", help="Monte Carlo fidelity table")
    pw.add_argument("--param", required=True)
    pw.add_argument("--range", required=True, help="a:b:n")
    pw.add_argument("--trials", type=int, default=1000)
    pw.add_argument("--seed", type=int)
    pw.add_argument("--threads", type=int, default=1)
    pw.add_argument("--config", help="chip file (default: one beam, one pulse)")
    pw.add_argument("--cycles", type=int)
    pw.add_argument("--base", help="noise parameter file for the fixed values")
    pw.add_argument("--no-headline", action="store_true")
    pw.add_argument("--out")
    pw.set_defaults(func=cmd_noise_sweep)

    pg = sub.add_parser("graph", help="export a preset topology")
    pg.add_argument("kind", choices=kinds)
    pg.add_argument("beams", type=int)
    pg.add_argument("cycles", type=int)
    pg.add_argument("--format", choices=("dot", "json"), default="dot")
    pg.add_argument("--out")
    pg.set_defaults(func=cmd_graph)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (AtomBeamError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
