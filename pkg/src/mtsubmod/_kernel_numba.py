"""numba run loop: the hot kernel behind gsemo.run.

Mirrors _kernel_numpy.py draw for draw; the two must produce bit-identical
populations and traces for any seed.  Cross-backend equality is enforced by
tests, so any edit here needs the matching edit there.
"""

import numpy as np
from numba import njit

U64 = np.uint64
GOLD = U64(0x9E3779B97F4A7C15)
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
S30 = U64(30)
S27 = U64(27)
S31 = U64(31)
S11 = U64(11)
S63 = U64(63)
ONE = U64(1)
U53_SCALE = 2.0 ** -53


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(cache=True, inline="always")
def _count_below(cdf, u):
    # first index with cdf[idx] > u (== searchsorted side='right')
    lo = 0
    hi = cdf.size
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def run_loop(
    obj_kind,      # 0 coverage, 1 modular
    indptr,        # int64[n+1] closed-neighborhood CSR (coverage)
    indices,       # int32[nnz]
    mod_values,    # float64[n] (modular)
    weights,       # int64[k, n]
    bounds,        # int64[k]
    n,
    budget,
    init_kind,     # 0 all-zeros, 1 random-uniform
    seed,          # uint64 stream state start
    cdf,           # float64[n+1] Binomial(n, 1/n) cdf
    checkpoints,   # int64[nc] sorted ascending within [0, budget]
    cap,           # initial capacity (hard cap + 1 slack when enforce_cap)
    enforce_cap,   # bool
):
    k = bounds.size
    nwords = (n + 63) // 64
    nc = checkpoints.size
    ncounts = n if obj_kind == 0 else 1

    pop_bits = np.zeros((cap, nwords), dtype=np.uint64)
    pop_counts = np.zeros((cap, ncounts), dtype=np.uint16)
    pop_ones = np.zeros(cap, dtype=np.int64)
    pop_costs = np.zeros((cap, k), dtype=np.int64)
    pop_f = np.zeros(cap, dtype=np.float64)
    pop_obj = np.zeros((cap, k + 1), dtype=np.float64)

    y_bits = np.zeros(nwords, dtype=np.uint64)
    y_counts = np.zeros(ncounts, dtype=np.uint16)
    y_costs = np.zeros(k, dtype=np.int64)
    y_obj = np.zeros(k + 1, dtype=np.float64)
    flips = np.zeros(n, dtype=np.int64)
    keep = np.zeros(cap, dtype=np.bool_)

    trace_size = np.zeros(nc, dtype=np.int64)
    trace_f = np.full((nc, k), -1.0, dtype=np.float64)
    trace_cost = np.full((nc, k), -1, dtype=np.int64)

    state = U64(seed)

    # initial search point
    if init_kind == 1:
        for j in range(n):
            state = state + GOLD
            if (_mix(state) >> S63) != U64(0):
                pop_bits[0, j >> 6] |= ONE << U64(j & 63)
    covered = 0
    f0 = 0.0
    for j in range(n):
        if (pop_bits[0, j >> 6] >> U64(j & 63)) & ONE:
            pop_ones[0] += 1
            for i in range(k):
                pop_costs[0, i] += weights[i, j]
            if obj_kind == 0:
                for t in range(indptr[j], indptr[j + 1]):
                    u = indices[t]
                    pop_counts[0, u] += 1
                    if pop_counts[0, u] == 1:
                        covered += 1
            else:
                f0 += mod_values[j]
    if obj_kind == 0:
        f0 = float(covered)
    pop_f[0] = f0
    feasible = False
    for i in range(k):
        if pop_costs[0, i] <= bounds[i]:
            feasible = True
    pop_obj[0, 0] = f0 if feasible else -1.0
    for i in range(k):
        pop_obj[0, 1 + i] = -float(pop_costs[0, i])
    size = 1
    max_size = 1
    cap_violated = False

    ci = 0
    while ci < nc and checkpoints[ci] == 0:
        trace_size[ci] = size
        _record(pop_costs, pop_f, pop_ones, bounds, size, trace_f, trace_cost, ci)
        ci += 1

    for t in range(1, budget + 1):
        state = state + GOLD
        parent = int(_mix(state) % U64(size))
        state = state + GOLD
        u53 = (_mix(state) >> S11) * U53_SCALE
        m = _count_below(cdf, u53)

        if m > 0:
            # sample m distinct flip positions by rejection
            for q in range(m):
                while True:
                    state = state + GOLD
                    pos = int(_mix(state) % U64(n))
                    dup = False
                    for r in range(q):
                        if flips[r] == pos:
                            dup = True
                            break
                    if not dup:
                        flips[q] = pos
                        break

            # offspring = parent with flips applied, f tracked incrementally
            for w in range(nwords):
                y_bits[w] = pop_bits[parent, w]
            for c in range(ncounts):
                y_counts[c] = pop_counts[parent, c]
            y_ones = pop_ones[parent]
            for i in range(k):
                y_costs[i] = pop_costs[parent, i]
            y_f = pop_f[parent]
            y_cov = int(y_f) if obj_kind == 0 else 0
            for q in range(m):
                j = flips[q]
                w = j >> 6
                b = U64(j & 63)
                if (y_bits[w] >> b) & ONE:
                    y_bits[w] ^= ONE << b
                    y_ones -= 1
                    for i in range(k):
                        y_costs[i] -= weights[i, j]
                    if obj_kind == 0:
                        for tt in range(indptr[j], indptr[j + 1]):
                            u = indices[tt]
                            y_counts[u] -= 1
                            if y_counts[u] == 0:
                                y_cov -= 1
                    else:
                        y_f -= mod_values[j]
                else:
                    y_bits[w] |= ONE << b
                    y_ones += 1
                    for i in range(k):
                        y_costs[i] += weights[i, j]
                    if obj_kind == 0:
                        for tt in range(indptr[j], indptr[j + 1]):
                            u = indices[tt]
                            y_counts[u] += 1
                            if y_counts[u] == 1:
                                y_cov += 1
                    else:
                        y_f += mod_values[j]
            if obj_kind == 0:
                y_f = float(y_cov)
            feasible = False
            for i in range(k):
                if y_costs[i] <= bounds[i]:
                    feasible = True
            y_obj[0] = y_f if feasible else -1.0
            for i in range(k):
                y_obj[1 + i] = -float(y_costs[i])

            # reject iff some member strictly dominates y
            rejected = False
            for idx in range(size):
                all_ge = True
                any_gt = False
                for c in range(k + 1):
                    pv = pop_obj[idx, c]
                    yv = y_obj[c]
                    if pv < yv:
                        all_ge = False
                        break
                    if pv > yv:
                        any_gt = True
                if all_ge and any_gt:
                    rejected = True
                    break

            if not rejected:
                # drop members weakly dominated by y (equality included)
                for idx in range(size):
                    drop = True
                    for c in range(k + 1):
                        if y_obj[c] < pop_obj[idx, c]:
                            drop = False
                            break
                    keep[idx] = not drop
                write = 0
                for idx in range(size):
                    if keep[idx]:
                        if write != idx:
                            for w in range(nwords):
                                pop_bits[write, w] = pop_bits[idx, w]
                            for c in range(ncounts):
                                pop_counts[write, c] = pop_counts[idx, c]
                            pop_ones[write] = pop_ones[idx]
                            for i in range(k):
                                pop_costs[write, i] = pop_costs[idx, i]
                            pop_f[write] = pop_f[idx]
                            for c in range(k + 1):
                                pop_obj[write, c] = pop_obj[idx, c]
                        write += 1

                if write == cap:
                    if enforce_cap:
                        cap_violated = True
                        size = write
                        break
                    new_cap = cap * 2
                    pop_bits = _grow2_u64(pop_bits, new_cap, write)
                    pop_counts = _grow2_u16(pop_counts, new_cap, write)
                    pop_ones = _grow1_i64(pop_ones, new_cap, write)
                    pop_costs = _grow2_i64(pop_costs, new_cap, write)
                    pop_f = _grow1_f64(pop_f, new_cap, write)
                    pop_obj = _grow2_f64(pop_obj, new_cap, write)
                    keep = np.zeros(new_cap, dtype=np.bool_)
                    cap = new_cap

                for w in range(nwords):
                    pop_bits[write, w] = y_bits[w]
                for c in range(ncounts):
                    pop_counts[write, c] = y_counts[c]
                pop_ones[write] = y_ones
                for i in range(k):
                    pop_costs[write, i] = y_costs[i]
                pop_f[write] = y_f
                for c in range(k + 1):
                    pop_obj[write, c] = y_obj[c]
                size = write + 1
                if size > max_size:
                    max_size = size
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


@njit(cache=True)
def _record(pop_costs, pop_f, pop_ones, bounds, size, trace_f, trace_cost, ci):
    k = bounds.size
    for i in range(k):
        best = -1
        for idx in range(size):
            if pop_costs[idx, i] > bounds[i]:
                continue
            if best < 0:
                best = idx
                continue
            if pop_f[idx] > pop_f[best]:
                best = idx
            elif pop_f[idx] == pop_f[best]:
                if pop_costs[idx, i] < pop_costs[best, i]:
                    best = idx
                elif pop_costs[idx, i] == pop_costs[best, i] and pop_ones[idx] < pop_ones[best]:
                    best = idx
        if best >= 0:
            trace_f[ci, i] = pop_f[best]
            trace_cost[ci, i] = pop_costs[best, i]


@njit(cache=True)
def _grow1_i64(arr, new_cap, size):
    out = np.zeros(new_cap, dtype=np.int64)
    out[:size] = arr[:size]
    return out


@njit(cache=True)
def _grow1_f64(arr, new_cap, size):
    out = np.zeros(new_cap, dtype=np.float64)
    out[:size] = arr[:size]
    return out


@njit(cache=True)
def _grow2_u64(arr, new_cap, size):
    out = np.zeros((new_cap, arr.shape[1]), dtype=np.uint64)
    out[:size] = arr[:size]
    return out


@njit(cache=True)
def _grow2_u16(arr, new_cap, size):
    out = np.zeros((new_cap, arr.shape[1]), dtype=np.uint16)
    out[:size] = arr[:size]
    return out


@njit(cache=True)
def _grow2_i64(arr, new_cap, size):
    out = np.zeros((new_cap, arr.shape[1]), dtype=np.int64)
    out[:size] = arr[:size]
    return out


@njit(cache=True)
def _grow2_f64(arr, new_cap, size):
    out = np.zeros((new_cap, arr.shape[1]), dtype=np.float64)
    out[:size] = arr[:size]
    return out
