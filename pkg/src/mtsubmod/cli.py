"""Command-line entry point: mt-submod {run,verify,stats,fetch}."""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from .core import Constraint, Mode, ProblemSet, population_bound
from .datasets import GRAPH_NAMES, fetch_graph
from .engine import resolve_backend, warm_up
from .graphs import induced_subgraph, parse_graph, write_edge_list
from .gsemo import RunConfig, extract_best, run
from .harness import (
    aggregate,
    format_results_csv,
    parse_config,
    read_raw_csv,
    run_experiment,
    write_outputs,
)
from .objectives import CoverageObjective
from .oracles import brute_force_opt, check_submodular_monotone, greedy
from .reference import run_reference
from .rng import SplitMix64, derive_seed

APPROX_RATIO = 1.0 - 1.0 / math.e


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    backend = resolve_backend(args.backend)
    print(f"backend: {backend}; warming up...", flush=True)
    warm_up(args.backend)

    def ticker(done, total):
        print(f"\r{done}/{total} runs complete", end="", file=sys.stderr, flush=True)
        if done == total:
            print(file=sys.stderr)

    t0 = time.time()
    rows, raw = run_experiment(cfg, workers=args.workers, backend=args.backend,
                               progress=ticker)
    elapsed = time.time() - t0
    write_outputs(args.out, cfg, rows, raw, backend=args.backend)
    print(f"{len(raw)} raw records, {len(rows)} result rows in {elapsed:.1f} s")
    print(f"wrote results.csv, raw_runs.csv, meta.txt under {args.out}")
    return 0


def _cmd_stats(args) -> int:
    raw = read_raw_csv(args.raw)
    rows = aggregate(raw)
    text = format_results_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _check(label: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] {label}{suffix}")
    return ok


def _cmd_verify(args) -> int:
    graph = parse_graph(args.graph)
    print(f"graph: n={graph.n}, edges={graph.edge_count}, "
          f"max closed neighborhood={graph.max_closed_neighborhood()}")
    stream = SplitMix64(derive_seed(args.seed, "verify", Path(args.graph).stem))
    ok = True

    # round trip through the canonical edge list
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "roundtrip.edges"
        write_edge_list(graph, path)
        reparsed = parse_graph(path, format="edge-list")
        same = reparsed.n == graph.n and (
            reparsed.canonical_edges() == graph.canonical_edges()
        )
    ok &= _check("parse/serialize round trip", same)

    # structure spot-check on an induced subgraph
    size = min(graph.n, args.subgraph_size)
    verts = set()
    while len(verts) < size:
        verts.add(stream.next_below(graph.n))
    sub = induced_subgraph(graph, verts)
    fsub = CoverageObjective.from_graph(sub)
    report = check_submodular_monotone(fsub, fsub.n, args.trials, stream.next_u64())
    ok &= _check(
        f"coverage monotone+submodular on induced n={sub.n}",
        report.passed,
        f"{args.trials} trials",
    )

    # oracle-backed optimizer checks at desk scale
    small_fail = 0
    greedy_fail = 0
    backend_fail = 0
    rounds = args.instances
    for _ in range(rounds):
        vs = set()
        while len(vs) < 10:
            vs.add(stream.next_below(graph.n))
        inst = induced_subgraph(graph, vs)
        f = CoverageObjective.from_graph(inst)
        bound = 1 + stream.next_below(4)
        con = Constraint(np.ones(inst.n, dtype=np.int64), bound)
        opt, _ = brute_force_opt(f, con)
        if f.evaluate(greedy(f, con).bits) < APPROX_RATIO * opt - 1e-9:
            greedy_fail += 1
        ps = ProblemSet(objective=f, constraints=(con,), mode=Mode.CLASSICAL)
        u = population_bound((con,), inst.n)
        budget = int(math.ceil(20 * math.e * inst.n * u * u))
        cfg = RunConfig(budget=budget, seed=stream.next_u64())
        pop, _ = run(ps, cfg)
        best = extract_best(pop, ps, 0)
        if best is None or best[1] < APPROX_RATIO * opt - 1e-9:
            small_fail += 1
        cfg_small = RunConfig(budget=400, seed=stream.next_u64(),
                              checkpoints=(0, 200, 400))
        pop_e, tr_e = run(ps, cfg_small)
        pop_r, tr_r = run_reference(ps, cfg_small)
        same = [ (x.bits.tobytes(), gv.values) for x, gv in pop_e.members ] == \
               [ (x.bits.tobytes(), gv.values) for x, gv in pop_r.members ]
        if not (same and np.array_equal(tr_e.archive_sizes, tr_r.archive_sizes)):
            backend_fail += 1
    ok &= _check(f"greedy >= (1-1/e)*OPT on {rounds} induced instances",
                 greedy_fail == 0)
    ok &= _check(f"optimizer >= (1-1/e)*OPT on {rounds} induced instances",
                 small_fail == 0)
    ok &= _check("engine matches reference implementation", backend_fail == 0)

    print("verification " + ("passed" if ok else "FAILED"))
    return 0 if ok else 1


def _cmd_fetch(args) -> int:
    names = args.names or list(GRAPH_NAMES)
    status = 0
    for name in names:
        try:
            path = fetch_graph(name, dest=args.dest)
            print(f"{name}: {path}")
        except OSError as exc:
            print(f"{name}: FAILED\n{exc}", file=sys.stderr)
            status = 1
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mt-submod",
        description="Classical and multitasking Pareto-archive optimization "
                    "of constrained max coverage",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--backend", default=None,
                       choices=("auto", "numba", "numpy"))
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser(
        "verify", help="run the oracle/property suite on a graph at reduced n"
    )
    p_verify.add_argument("--graph", required=True)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--trials", type=int, default=1000)
    p_verify.add_argument("--subgraph-size", type=int, default=500)
    p_verify.add_argument("--instances", type=int, default=5)
    p_verify.set_defaults(func=_cmd_verify)

    p_stats = sub.add_parser("stats", help="re-aggregate raw run records")
    p_stats.add_argument("--raw", required=True)
    p_stats.add_argument("--out", default=None)
    p_stats.set_defaults(func=_cmd_stats)

    p_fetch = sub.add_parser("fetch", help="download the benchmark graphs")
    p_fetch.add_argument("names", nargs="*", metavar="NAME",
                         help=f"graph names (default: {', '.join(GRAPH_NAMES)})")
    p_fetch.add_argument("--dest", default=None)
    p_fetch.set_defaults(func=_cmd_fetch)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
