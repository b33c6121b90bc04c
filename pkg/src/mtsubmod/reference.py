"""Straight-line reference implementation of the optimizer.

Built only on the domain types and from-scratch objective evaluation, with
no incremental caches and no kernel tricks: the slow, obviously-correct
twin used to validate both engine backends draw for draw.  Any divergence
between a reference run and an engine run on the same seed is a bug.
"""

from __future__ import annotations

import numpy as np

from .core import BitString, Population, ProblemSet
from .gsemo import INIT_RANDOM, RunConfig, RunTrace, fitness
from .rng import SplitMix64, binomial_cdf_table


def run_reference(ps: ProblemSet, cfg: RunConfig):
    """Reference run; returns (Population, RunTrace) like gsemo.run."""
    n = ps.n
    k = ps.k
    stream = SplitMix64(cfg.seed)
    cdf = binomial_cdf_table(n, 1.0 / n)

    bits = np.zeros(n, dtype=np.uint8)
    if cfg.init == INIT_RANDOM:
        for j in range(n):
            bits[j] = stream.next_u64() >> 63
    x0 = BitString(bits)
    pop = Population()
    pop.insert(x0, fitness(ps, x0))
    max_size = 1

    nc = len(cfg.checkpoints)
    sizes = np.zeros(nc, dtype=np.int64)
    best_f = np.full((nc, k), np.nan)
    best_cost = np.full((nc, k), np.nan)

    def record(ci):
        sizes[ci] = len(pop)
        for i in range(k):
            found = None
            for x, gv in pop.members:
                cost = -gv[1 + i]
                if cost > ps.constraints[i].bound:
                    continue
                key = (-gv[0], cost, x.ones_count())
                if found is None or key < found[0]:
                    found = (key, gv[0], cost)
            if found is not None:
                best_f[ci, i] = found[1]
                best_cost[ci, i] = found[2]

    ci = 0
    while ci < nc and cfg.checkpoints[ci] == 0:
        record(ci)
        ci += 1

    for t in range(1, cfg.budget + 1):
        parent = pop.members[stream.next_below(len(pop))][0]
        u53 = stream.next_unit()
        m = int(np.searchsorted(cdf, u53, side="right"))
        if m > 0:
            flips = []
            for _ in range(m):
                while True:
                    pos = stream.next_below(n)
                    if pos not in flips:
                        flips.append(pos)
                        break
            y = parent.with_flipped(flips)
            pop.insert(y, fitness(ps, y))
            max_size = max(max_size, len(pop))
        # zero-flip offspring equal their parent: archive (and its order)
        # unchanged, budget consumed
        while ci < nc and cfg.checkpoints[ci] == t:
            record(ci)
            ci += 1

    trace = RunTrace(
        checkpoints=cfg.checkpoints,
        archive_sizes=sizes,
        best_f=best_f,
        best_cost=best_cost,
        max_archive_size=max_size,
    )
    return pop, trace
