"""The archive optimizer: per-bit mutation, Pareto insertion, tracing.

One iteration = one offspring = one primary-function evaluation; the budget
counts iterations (the initial point's evaluation is free).  An offspring
with zero flipped bits equals its parent exactly, so it consumes budget but
cannot change the archive; the engine skips the redundant re-evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BitString,
    ContractError,
    Mode,
    ObjectiveVector,
    Population,
    ProblemSet,
)
from .engine import EngineResult, InvariantViolation, run_arrays
from .objectives import evaluate

INIT_ALL_ZEROS = "all-zeros"
INIT_RANDOM = "random-uniform"
_INIT_CODES = {INIT_ALL_ZEROS: 0, INIT_RANDOM: 1}


@dataclass(frozen=True)
class RunConfig:
    budget: int
    seed: int
    init: str = INIT_ALL_ZEROS
    checkpoints: tuple = ()

    def __post_init__(self):
        if self.budget < 0:
            raise ContractError("budget must be >= 0")
        if self.init not in _INIT_CODES:
            raise ContractError(f"init must be one of {sorted(_INIT_CODES)}")
        cps = tuple(sorted(int(c) for c in self.checkpoints))
        if cps and (cps[0] < 0 or cps[-1] > self.budget):
            raise ContractError("checkpoints must lie within [0, budget]")
        if len(set(cps)) != len(cps):
            raise ContractError("checkpoints must be distinct")
        object.__setattr__(self, "checkpoints", cps)


@dataclass
class RunTrace:
    """Per-checkpoint archive size and per-problem best feasible (f, cost)."""

    checkpoints: tuple
    archive_sizes: np.ndarray   # int64[nc]
    best_f: np.ndarray          # float64[nc, k]; NaN where no feasible member
    best_cost: np.ndarray       # float64[nc, k]; NaN where no feasible member
    max_archive_size: int = 0

    def best_at(self, checkpoint: int, problem: int):
        """(f, cost) of the best feasible member for a problem, or None."""
        ci = self.checkpoints.index(checkpoint)
        f = self.best_f[ci, problem]
        if np.isnan(f):
            return None
        return float(f), int(self.best_cost[ci, problem])


def fitness_classical(ps: ProblemSet, x) -> ObjectiveVector:
    """(g1, -c) with g1 = f(x) when c(x) <= B, else -1."""
    if ps.mode is not Mode.CLASSICAL:
        raise ContractError("problem set is not classical-single")
    return fitness_multitask(ps, x, _check_mode=False)


def fitness_multitask(ps: ProblemSet, x, _check_mode: bool = True) -> ObjectiveVector:
    """(g1, -c_1, ..., -c_k) with g1 = f(x) when some c_i(x) <= B_i, else -1.

    f is evaluated exactly once per call; with k = 1 this coincides with the
    classical formulation.
    """
    if _check_mode and ps.mode is not Mode.MULTITASK:
        raise ContractError("problem set is not multitasking")
    fx = evaluate(ps.objective, x)
    costs = [c.cost(x) for c in ps.constraints]
    feasible = any(ci <= c.bound for ci, c in zip(costs, ps.constraints))
    g1 = fx if feasible else -1.0
    return ObjectiveVector([g1] + [-ci for ci in costs])


def fitness(ps: ProblemSet, x) -> ObjectiveVector:
    if ps.mode is Mode.CLASSICAL:
        return fitness_classical(ps, x)
    return fitness_multitask(ps, x)


def _unpack_bits(words: np.ndarray, n: int) -> BitString:
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n]
    return BitString(bits)


def _population_from(result: EngineResult, n: int) -> Population:
    pop = Population()
    pop.members = [
        (_unpack_bits(result.bits[row], n), ObjectiveVector(result.obj[row]))
        for row in range(result.bits.shape[0])
    ]
    return pop


def run(ps: ProblemSet, cfg: RunConfig, backend: str | None = None):
    """Run the optimizer; returns (Population, RunTrace).

    Deterministic: identical (ps, cfg) including seed give bit-identical
    results on every backend.  For all-uniform constraint sets the archive
    size is checked against the theoretical cap at every step, and with
    all-zeros init the per-problem best-feasible trace must be nondecreasing;
    violations raise InvariantViolation.
    """
    result = run_arrays(
        ps,
        cfg.budget,
        _INIT_CODES[cfg.init],
        cfg.seed,
        cfg.checkpoints,
        backend=backend,
    )
    nc = len(cfg.checkpoints)
    best_f = result.trace_f.astype(np.float64).copy()
    best_cost = result.trace_cost.astype(np.float64)
    none_mask = best_f < 0
    best_f[none_mask] = np.nan
    best_cost = np.where(none_mask, np.nan, best_cost)
    trace = RunTrace(
        checkpoints=cfg.checkpoints,
        archive_sizes=result.trace_size[:nc],
        best_f=best_f,
        best_cost=best_cost,
        max_archive_size=result.max_size,
    )
    if cfg.init == INIT_ALL_ZEROS and ps.all_uniform and nc > 1:
        for i in range(ps.k):
            col = trace.best_f[:, i]
            vals = col[~np.isnan(col)]
            if np.any(np.diff(vals) < 0):
                raise InvariantViolation(
                    f"best feasible value decreased for problem {i}"
                )
    return _population_from(result, ps.n), trace


def extract_best(population: Population, ps: ProblemSet, problem: int):
    """Best member feasible for one problem, or None.

    problem is 0-based.  Ties on f break toward lower cost for that problem,
    then lower ones count, then earlier archive position.
    """
    if not 0 <= problem < ps.k:
        raise ContractError(f"problem index {problem} out of range [0, {ps.k})")
    constraint = ps.constraints[problem]
    best = None
    best_key = None
    for x, gv in population.members:
        cost = -gv[1 + problem]
        if cost > constraint.bound:
            continue
        fx = gv[0]
        if fx < 0:
            # cost within bound forces g1 = f >= 0; guards hand-built members
            continue
        key = (-fx, cost, x.ones_count())
        if best is None or key < best_key:
            best = (x, fx)
            best_key = key
    return best
