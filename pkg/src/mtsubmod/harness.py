"""Experiment harness: seeded repeated runs in both modes with fair budgets.

Protocol per repetition r over a graph with k bounds and checkpoint
generations G_1 < ... < G_max:

  classical     k independent runs, one per problem (f, c_i, B_i), each with
                budget G_max iterations; problem i is read at iteration G.
  multitasking  one run on the k-constraint problem set with budget
                k * G_max iterations; checkpoint G is read at iteration
                k * G, so both modes spend the same k * G_max primary
                evaluations per repetition.

Every run seed derives from (master seed, graph id, regime, bound set,
repetition, problem index or the "multitask" sentinel); random-linear
weight vectors derive from the same tuple family with a "weights" tag, so
classical and multitasking solve identical problems.  All of it is recorded
in meta.txt.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import multiprocessing
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import __version__
from .core import ContractError, Mode, ProblemSet
from .engine import resolve_backend
from .graphs import REGIMES, Graph, build_constraint, parse_graph
from .gsemo import INIT_ALL_ZEROS, RunConfig, run
from .objectives import CoverageObjective
from .rng import GENERATOR_ID, derive_seed
from .stats import compare

DEFAULT_CHECKPOINTS = (100_000, 200_000, 500_000, 1_000_000)
MODES = ("classical", "multitasking", "both")
MULTITASK_SENTINEL = "multitask"

RESULTS_HEADER = (
    "graph,regime,bound,generations,mean_classical,std_classical,"
    "mean_multitask,std_multitask,H,p,verdict"
)
RAW_HEADER = (
    "graph,regime,mode,repetition,problem,bound,generations,best_f,cost,archive_size"
)


@dataclass(frozen=True)
class ExperimentConfig:
    graphs: tuple
    regime: str
    bounds: tuple
    checkpoints: tuple = DEFAULT_CHECKPOINTS
    repetitions: int = 30
    seed: int = 0
    modes: str = "both"
    resample_weights: bool = True
    graph_format: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(str(g) for g in self.graphs))
        object.__setattr__(self, "bounds", tuple(int(b) for b in self.bounds))
        cps = tuple(sorted(set(int(c) for c in self.checkpoints)))
        object.__setattr__(self, "checkpoints", cps)
        if not self.graphs:
            raise ContractError("at least one graph required")
        if self.regime not in REGIMES:
            raise ContractError(f"regime must be one of {REGIMES}")
        if not self.bounds or any(b <= 0 for b in self.bounds):
            raise ContractError("bounds must be positive")
        if not cps or cps[0] <= 0:
            raise ContractError("checkpoints must be positive")
        if self.repetitions < 1:
            raise ContractError("repetitions must be >= 1")
        if self.modes not in MODES:
            raise ContractError(f"modes must be one of {MODES}")

    @property
    def k(self) -> int:
        return len(self.bounds)

    @property
    def budget(self) -> int:
        return max(self.checkpoints)


def parse_config(path) -> ExperimentConfig:
    """Parse the flat "key = value" experiment config format.

    Keys: graph (comma-separated paths), format, regime, bounds,
    checkpoints, repetitions, seed, modes, resample_weights.
    Lines starting with '#' are comments.
    """
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ContractError(f"{path}:{line_no}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()

    def intlist(s):
        return tuple(int(tok) for tok in s.replace(",", " ").split())

    try:
        cfg = ExperimentConfig(
            graphs=tuple(tok.strip() for tok in values["graph"].split(",")),
            regime=values["regime"],
            bounds=intlist(values["bounds"]),
            checkpoints=intlist(values.get("checkpoints", "")) or DEFAULT_CHECKPOINTS,
            repetitions=int(values.get("repetitions", 30)),
            seed=int(values.get("seed", 0)),
            modes=values.get("modes", "both"),
            resample_weights=values.get("resample_weights", "true").lower()
            in ("true", "1", "yes"),
            graph_format=values.get("format", "auto"),
        )
    except KeyError as exc:
        raise ContractError(f"{path}: missing config key {exc}") from exc
    return cfg


class RawRecord(NamedTuple):
    graph: str
    regime: str
    mode: str
    repetition: int
    problem: int        # 1-based, matching the bound list order
    bound: int          # nominal bound (random-linear scaling not applied)
    generations: int    # per-problem generation checkpoint
    best_f: float
    cost: int           # exact integer cost in run units (scaled if scaled)
    archive_size: int


class ResultRow(NamedTuple):
    graph: str
    regime: str
    bound: int
    generations: int
    mean_classical: float | None
    std_classical: float | None
    mean_multitask: float | None
    std_multitask: float | None
    H: float | None
    p: float | None
    verdict: str


def _graph_id(path: str) -> str:
    return Path(path).stem


def weight_seed(master: int, graph_id: str, regime: str, bounds, problem: int,
                repetition: int, resample: bool) -> int:
    rep_token = repetition if resample else -1
    return derive_seed(master, "weights", graph_id, regime,
                       ",".join(str(b) for b in bounds), problem, rep_token)


def run_seed(master: int, graph_id: str, regime: str, bounds,
             repetition: int, problem) -> int:
    return derive_seed(master, "run", graph_id, regime,
                       ",".join(str(b) for b in bounds), repetition, problem)


def build_problem_constraints(graph: Graph, cfg: ExperimentConfig,
                              graph_id: str, repetition: int) -> tuple:
    """The k constraints of one repetition (shared verbatim by both modes)."""
    constraints = []
    for i, bound in enumerate(cfg.bounds):
        seed = weight_seed(cfg.seed, graph_id, cfg.regime, cfg.bounds,
                           i, repetition, cfg.resample_weights)
        constraints.append(build_constraint(graph, cfg.regime, bound, seed))
    return tuple(constraints)


# worker context shared via fork (set before the pool starts)
_WORKER_CTX = {}


def _execute_task(task):
    graph_key, repetition, mode, problem = task
    cfg: ExperimentConfig = _WORKER_CTX["cfg"]
    graph: Graph = _WORKER_CTX["graphs"][graph_key]
    objective: CoverageObjective = _WORKER_CTX["objectives"][graph_key]
    backend = _WORKER_CTX["backend"]
    graph_id = _graph_id(graph_key)
    constraints = build_problem_constraints(graph, cfg, graph_id, repetition)
    records = []
    if mode == "classical":
        ps = ProblemSet(objective=objective,
                        constraints=(constraints[problem],),
                        mode=Mode.CLASSICAL)
        seed = run_seed(cfg.seed, graph_id, cfg.regime, cfg.bounds, repetition, problem)
        rc = RunConfig(budget=cfg.budget, seed=seed, init=INIT_ALL_ZEROS,
                       checkpoints=cfg.checkpoints)
        _, trace = run(ps, rc, backend=backend)
        for ci, gen in enumerate(cfg.checkpoints):
            records.append(RawRecord(
                graph=graph_id, regime=cfg.regime, mode="classical",
                repetition=repetition, problem=problem + 1,
                bound=cfg.bounds[problem], generations=gen,
                best_f=float(trace.best_f[ci, 0]),
                cost=int(trace.best_cost[ci, 0]),
                archive_size=int(trace.archive_sizes[ci]),
            ))
    else:
        ps = ProblemSet(objective=objective, constraints=constraints,
                        mode=Mode.MULTITASK)
        seed = run_seed(cfg.seed, graph_id, cfg.regime, cfg.bounds,
                        repetition, MULTITASK_SENTINEL)
        k = cfg.k
        rc = RunConfig(budget=k * cfg.budget, seed=seed, init=INIT_ALL_ZEROS,
                       checkpoints=tuple(k * g for g in cfg.checkpoints))
        _, trace = run(ps, rc, backend=backend)
        for ci, gen in enumerate(cfg.checkpoints):
            for i in range(k):
                records.append(RawRecord(
                    graph=graph_id, regime=cfg.regime, mode="multitasking",
                    repetition=repetition, problem=i + 1,
                    bound=cfg.bounds[i], generations=gen,
                    best_f=float(trace.best_f[ci, i]),
                    cost=int(trace.best_cost[ci, i]),
                    archive_size=int(trace.archive_sizes[ci]),
                ))
    return records


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   backend: str | None = None, progress=None):
    """Execute the full protocol; returns (result_rows, raw_records).

    A failing run aborts the whole experiment rather than aggregating
    partial results.  progress, if given, is called as progress(done, total)
    after each completed run (the CLI uses it for a stderr ticker).
    """
    graphs = {}
    objectives = {}
    for path in cfg.graphs:
        g = parse_graph(path, format=cfg.graph_format)
        graphs[path] = g
        objectives[path] = CoverageObjective.from_graph(g)

    tasks = []
    for path in cfg.graphs:
        for rep in range(cfg.repetitions):
            if cfg.modes in ("classical", "both"):
                for i in range(cfg.k):
                    tasks.append((path, rep, "classical", i))
            if cfg.modes in ("multitasking", "both"):
                tasks.append((path, rep, "multitasking", None))

    _WORKER_CTX.clear()
    _WORKER_CTX.update(
        cfg=cfg, graphs=graphs, objectives=objectives, backend=backend
    )
    raw: list[RawRecord] = []
    done = 0
    if workers <= 1:
        for task in tasks:
            raw.extend(_execute_task(task))
            done += 1
            if progress:
                progress(done, len(tasks))
    else:
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, mp_context=ctx
        ) as pool:
            for records in pool.map(_execute_task, tasks, chunksize=1):
                raw.extend(records)
                done += 1
                if progress:
                    progress(done, len(tasks))
    _WORKER_CTX.clear()

    raw.sort(key=lambda r: (r.graph, r.regime, r.problem, r.generations,
                            r.mode, r.repetition))
    return aggregate(raw, expected_reps=cfg.repetitions), raw


def aggregate(raw, expected_reps: int | None = None) -> list[ResultRow]:
    """Collapse raw records into one row per (graph, regime, bound, checkpoint)."""
    groups: dict = {}
    order = []
    for r in raw:
        key = (r.graph, r.regime, r.problem, r.bound, r.generations)
        if key not in groups:
            groups[key] = {"classical": [], "multitasking": []}
            order.append(key)
        groups[key][r.mode].append(r.best_f)
    rows = []
    for key in sorted(order):
        graph, regime, _problem, bound, gens = key
        cs = groups[key]["classical"]
        ms = groups[key]["multitasking"]
        if expected_reps is not None:
            for name, sample in (("classical", cs), ("multitasking", ms)):
                if sample and len(sample) != expected_reps:
                    raise ContractError(
                        f"{name} sample for {key} has {len(sample)} of "
                        f"{expected_reps} repetitions"
                    )
        mean_c = float(np.mean(cs)) if cs else None
        std_c = float(np.std(cs, ddof=1)) if len(cs) > 1 else (0.0 if cs else None)
        mean_m = float(np.mean(ms)) if ms else None
        std_m = float(np.std(ms, ddof=1)) if len(ms) > 1 else (0.0 if ms else None)
        if len(cs) >= 2 and len(ms) >= 2:
            res = compare(cs, ms)
            rows.append(ResultRow(graph, regime, bound, gens,
                                  res.mean_c, res.std_c, res.mean_m, res.std_m,
                                  res.H, res.p, res.verdict.symbol))
        else:
            rows.append(ResultRow(graph, regime, bound, gens,
                                  mean_c, std_c, mean_m, std_m,
                                  None, None, ""))
    return rows


def _fmt_mean(v) -> str:
    return "" if v is None else f"{v:.1f}"


def _fmt_stat(v) -> str:
    return "" if v is None else f"{v:.12g}"


def format_results_csv(rows) -> str:
    out = io.StringIO()
    out.write(RESULTS_HEADER + "\n")
    for r in rows:
        out.write(",".join([
            r.graph, r.regime, str(r.bound), str(r.generations),
            _fmt_mean(r.mean_classical), _fmt_mean(r.std_classical),
            _fmt_mean(r.mean_multitask), _fmt_mean(r.std_multitask),
            _fmt_stat(r.H), _fmt_stat(r.p), r.verdict,
        ]) + "\n")
    return out.getvalue()


def format_raw_csv(raw) -> str:
    out = io.StringIO()
    out.write(RAW_HEADER + "\n")
    for r in raw:
        out.write(",".join([
            r.graph, r.regime, r.mode, str(r.repetition), str(r.problem),
            str(r.bound), str(r.generations), f"{r.best_f:.12g}",
            str(r.cost), str(r.archive_size),
        ]) + "\n")
    return out.getvalue()


def read_raw_csv(path) -> list[RawRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(RawRecord(
                graph=row["graph"], regime=row["regime"], mode=row["mode"],
                repetition=int(row["repetition"]), problem=int(row["problem"]),
                bound=int(row["bound"]), generations=int(row["generations"]),
                best_f=float(row["best_f"]), cost=int(row["cost"]),
                archive_size=int(row["archive_size"]),
            ))
    return records


def format_meta(cfg: ExperimentConfig, backend: str | None) -> str:
    lines = [
        f"package-version: {__version__}",
        f"generator: {GENERATOR_ID}",
        f"backend: {resolve_backend(backend)}",
        "seed-derivation: child = splitmix64-mix chain over "
        "(master, tag, graph id, regime, bound list, ...); run seeds use "
        "tag 'run' + (repetition, problem index | 'multitask'); weight seeds "
        "use tag 'weights' + (problem index, repetition | -1 when fixed)",
        f"master-seed: {cfg.seed}",
        "std-convention: sample standard deviation (n-1 denominator)",
        "weights-convention: random-linear draws ceil(U[50,150)) per item, "
        "independently per problem; bounds scaled by 100 internally and "
        "reported at their nominal value; costs stay in scaled units",
        f"resample-weights-per-repetition: {cfg.resample_weights}",
        "checkpoint-semantics: multitasking checkpoint G is read at "
        "iteration k*G (budget k*G_max); classical runs use budget G_max",
        f"graphs: {', '.join(cfg.graphs)}",
        f"regime: {cfg.regime}",
        f"bounds: {', '.join(str(b) for b in cfg.bounds)}",
        f"checkpoints: {', '.join(str(c) for c in cfg.checkpoints)}",
        f"repetitions: {cfg.repetitions}",
        f"modes: {cfg.modes}",
    ]
    return "\n".join(lines) + "\n"


def write_outputs(out_dir, cfg: ExperimentConfig, rows, raw,
                  backend: str | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(format_results_csv(rows), encoding="utf-8")
    (out / "raw_runs.csv").write_text(format_raw_csv(raw), encoding="utf-8")
    (out / "meta.txt").write_text(format_meta(cfg, backend), encoding="utf-8")
