"""Pure-numpy run loop: fallback for environments without numba.

Draw-for-draw mirror of _kernel_numba.run_loop; both produce bit-identical
populations and traces for any seed (tests enforce this).  Python-level
iteration makes it one to two orders of magnitude slower, so it is meant
for verification and small budgets, not the 10^6-generation experiments.
"""

import numpy as np

MASK = 0xFFFFFFFFFFFFFFFF
GOLD = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
U53_SCALE = 2.0 ** -53


def _mix(z):
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return (z ^ (z >> 31)) & MASK


def run_loop(
    obj_kind,
    indptr,
    indices,
    mod_values,
    weights,
    bounds,
    n,
    budget,
    init_kind,
    seed,
    cdf,
    checkpoints,
    cap,
    enforce_cap,
):
    k = bounds.size
    nwords = (n + 63) // 64
    nc = checkpoints.size
    ncounts = n if obj_kind == 0 else 1
    coverage = obj_kind == 0

    pop_bits = np.zeros((cap, nwords), dtype=np.uint64)
    pop_counts = np.zeros((cap, ncounts), dtype=np.uint16)
    pop_ones = np.zeros(cap, dtype=np.int64)
    pop_costs = np.zeros((cap, k), dtype=np.int64)
    pop_f = np.zeros(cap, dtype=np.float64)
    pop_obj = np.zeros((cap, k + 1), dtype=np.float64)

    trace_size = np.zeros(nc, dtype=np.int64)
    trace_f = np.full((nc, k), -1.0, dtype=np.float64)
    trace_cost = np.full((nc, k), -1, dtype=np.int64)

    state = int(seed) & MASK

    # initial search point
    init_bits = np.zeros(n, dtype=np.uint8)
    if init_kind == 1:
        for j in range(n):
            state = (state + GOLD) & MASK
            if _mix(state) >> 63:
                init_bits[j] = 1
    selected = np.flatnonzero(init_bits)
    words = selected >> 6
    shifts = (selected & 63).astype(np.uint64)
    np.bitwise_or.at(pop_bits[0], words, np.uint64(1) << shifts)
    pop_ones[0] = selected.size
    for i in range(k):
        pop_costs[0, i] = int(weights[i, selected].sum()) if selected.size else 0
    if coverage:
        covered = 0
        for j in selected:
            nbr = indices[indptr[j]:indptr[j + 1]]
            pop_counts[0, nbr] += 1
            covered += int((pop_counts[0, nbr] == 1).sum())
        f0 = float(covered)
    else:
        f0 = 0.0
        for j in selected:
            f0 += mod_values[j]
    pop_f[0] = f0
    feasible = bool((pop_costs[0] <= bounds).any())
    pop_obj[0, 0] = f0 if feasible else -1.0
    pop_obj[0, 1:] = -pop_costs[0].astype(np.float64)
    size = 1
    max_size = 1
    cap_violated = False

    ci = 0
    while ci < nc and checkpoints[ci] == 0:
        trace_size[ci] = size
        _record(pop_costs, pop_f, pop_ones, bounds, size, trace_f, trace_cost, ci)
        ci += 1

    flips = np.zeros(n, dtype=np.int64)

    for t in range(1, budget + 1):
        state = (state + GOLD) & MASK
        parent = _mix(state) % size
        state = (state + GOLD) & MASK
        u53 = (_mix(state) >> 11) * U53_SCALE
        m = int(np.searchsorted(cdf, u53, side="right"))

        if m > 0:
            for q in range(m):
                while True:
                    state = (state + GOLD) & MASK
                    pos = _mix(state) % n
                    if pos not in flips[:q]:
                        flips[q] = pos
                        break

            y_bits = pop_bits[parent].copy()
            y_counts = pop_counts[parent].copy()
            y_ones = int(pop_ones[parent])
            y_costs = pop_costs[parent].copy()
            y_f = float(pop_f[parent])
            y_cov = int(y_f) if coverage else 0
            for q in range(m):
                j = int(flips[q])
                w = j >> 6
                b = np.uint64(j & 63)
                if (y_bits[w] >> b) & np.uint64(1):
                    y_bits[w] ^= np.uint64(1) << b
                    y_ones -= 1
                    y_costs -= weights[:, j]
                    if coverage:
                        nbr = indices[indptr[j]:indptr[j + 1]]
                        y_counts[nbr] -= 1
                        y_cov -= int((y_counts[nbr] == 0).sum())
                    else:
                        y_f -= mod_values[j]
                else:
                    y_bits[w] |= np.uint64(1) << b
                    y_ones += 1
                    y_costs += weights[:, j]
                    if coverage:
                        nbr = indices[indptr[j]:indptr[j + 1]]
                        y_counts[nbr] += 1
                        y_cov += int((y_counts[nbr] == 1).sum())
                    else:
                        y_f += mod_values[j]
            if coverage:
                y_f = float(y_cov)
            y_obj = np.empty(k + 1, dtype=np.float64)
            y_obj[0] = y_f if bool((y_costs <= bounds).any()) else -1.0
            y_obj[1:] = -y_costs.astype(np.float64)

            cur = pop_obj[:size]
            ge = cur >= y_obj
            rejected = bool((ge.all(axis=1) & (cur > y_obj).any(axis=1)).any())

            if not rejected:
                keep_idx = np.flatnonzero(~(y_obj >= cur).all(axis=1))
                write = keep_idx.size
                if write != size:
                    pop_bits[:write] = pop_bits[keep_idx]
                    pop_counts[:write] = pop_counts[keep_idx]
                    pop_ones[:write] = pop_ones[keep_idx]
                    pop_costs[:write] = pop_costs[keep_idx]
                    pop_f[:write] = pop_f[keep_idx]
                    pop_obj[:write] = pop_obj[keep_idx]

                if write == cap:
                    if enforce_cap:
                        cap_violated = True
                        size = write
                        break
                    new_cap = cap * 2
                    pop_bits = _grow(pop_bits, new_cap, write)
                    pop_counts = _grow(pop_counts, new_cap, write)
                    pop_ones = _grow(pop_ones, new_cap, write)
                    pop_costs = _grow(pop_costs, new_cap, write)
                    pop_f = _grow(pop_f, new_cap, write)
                    pop_obj = _grow(pop_obj, new_cap, write)
                    cap = new_cap

                pop_bits[write] = y_bits
                pop_counts[write] = y_counts
                pop_ones[write] = y_ones
                pop_costs[write] = y_costs
                pop_f[write] = y_f
                pop_obj[write] = y_obj
                size = write + 1
                max_size = max(max_size, size)
                if enforce_cap and size >= cap:
                    cap_violated = True
                    break

        while ci < nc and checkpoints[ci] == t:
            trace_size[ci] = size
            _record(pop_costs, pop_f, pop_ones, bounds, size, trace_f, trace_cost, ci)
            ci += 1

    return (
        pop_bits[:size].copy(),
        pop_ones[:size].copy(),
        pop_costs[:size].copy(),
        pop_f[:size].copy(),
        pop_obj[:size].copy(),
        trace_size,
        trace_f,
        trace_cost,
        max_size,
        cap_violated,
    )


def _record(pop_costs, pop_f, pop_ones, bounds, size, trace_f, trace_cost, ci):
    k = bounds.size
    for i in range(k):
        feas = np.flatnonzero(pop_costs[:size, i] <= bounds[i])
        if feas.size == 0:
            continue
        # lexicographic best: max f, then min cost, then min ones, then index
        order = np.lexsort(
            (feas, pop_ones[feas], pop_costs[feas, i], -pop_f[feas])
        )
        best = int(feas[order[0]])
        trace_f[ci, i] = pop_f[best]
        trace_cost[ci, i] = pop_costs[best, i]


def _grow(arr, new_cap, size):
    shape = (new_cap,) + arr.shape[1:]
    out = np.zeros(shape, dtype=arr.dtype)
    out[:size] = arr[:size]
    return out
