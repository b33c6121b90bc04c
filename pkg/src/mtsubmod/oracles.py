"""Ground-truth machinery: exhaustive optima, greedy baseline, structure checks.

Everything here is written against the plain objective interface with no
dependency on the run engine, so these routines can serve as independent
oracles for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BitString, Constraint, ConstraintKind, ContractError
from .objectives import marginal_gain
from .rng import SplitMix64

ENUMERATION_LIMIT = 24          # masks fit comfortably in memory/time
GENERIC_ENUMERATION_LIMIT = 16  # per-subset python evaluation
_CHUNK_BITS = 20


def _mask_to_bitstring(mask: int, n: int) -> BitString:
    return BitString([(mask >> j) & 1 for j in range(n)])


def _chunk_masks(n: int):
    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    for start in range(0, total, step):
        yield np.arange(start, min(start + step, total), dtype=np.int64)


def _popcount_masks(masks: np.ndarray) -> np.ndarray:
    return np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)


def _coverage_values(f, masks: np.ndarray) -> np.ndarray:
    # vertex u is covered iff some selected item lies in u's closed
    # neighborhood; symmetry makes that neighborhood its own coverer mask
    vals = np.zeros(masks.size, dtype=np.int64)
    for u in range(f.n):
        nbr = f.closed_neighborhood(u)
        coverer = 0
        for j in nbr:
            coverer |= 1 << int(j)
        vals += (masks & coverer) != 0
    return vals.astype(np.float64)


def _modular_values(f, masks: np.ndarray) -> np.ndarray:
    vals = np.zeros(masks.size, dtype=np.float64)
    for j in range(f.n):
        vals += f.item_values[j] * ((masks >> j) & 1)
    return vals


def _batch_values(f, masks: np.ndarray) -> np.ndarray:
    if getattr(f, "kind", None) == "coverage":
        return _coverage_values(f, masks)
    if getattr(f, "kind", None) == "modular":
        return _modular_values(f, masks)
    if f.n > GENERIC_ENUMERATION_LIMIT:
        raise ContractError(
            f"per-subset enumeration limited to n <= {GENERIC_ENUMERATION_LIMIT}"
        )
    bits = ((masks[:, None] >> np.arange(f.n)) & 1).astype(np.uint8)
    return np.array([f.evaluate(row) for row in bits], dtype=np.float64)


def _costs(constraint: Constraint, masks: np.ndarray, ones: np.ndarray) -> np.ndarray:
    if constraint.is_uniform:
        return ones * int(constraint.weights[0])
    cost = np.zeros(masks.size, dtype=np.int64)
    for j in range(constraint.n):
        w = int(constraint.weights[j])
        if w:
            cost += w * ((masks >> j) & 1)
    return cost


def brute_force_opt(f, constraint: Constraint, bound: int | None = None):
    """Exact maximum of f over feasible solutions, with one witness.

    Enumerates all 2^n solutions in chunks (n <= 24); the witness is the
    lowest-mask maximizer, so results are deterministic.
    """
    n = f.n
    if n > ENUMERATION_LIMIT:
        raise ContractError(f"brute force refuses n = {n} > {ENUMERATION_LIMIT}")
    if constraint.n != n:
        raise ContractError("constraint/objective size mismatch")
    bound = constraint.bound if bound is None else int(bound)
    best_val = -np.inf
    best_mask = 0
    for masks in _chunk_masks(n):
        ones = _popcount_masks(masks)
        feas = _costs(constraint, masks, ones) <= bound
        if not feas.any():
            continue
        vals = _batch_values(f, masks)
        vals[~feas] = -np.inf
        idx = int(np.argmax(vals))
        if vals[idx] > best_val:
            best_val = float(vals[idx])
            best_mask = int(masks[idx])
    if best_val == -np.inf:
        raise ContractError("no feasible solution (is the bound negative?)")
    return best_val, _mask_to_bitstring(best_mask, n)


@dataclass(frozen=True)
class OptTable:
    """OPT_b for every ones-budget b in 0..b_max (uniform-cost case)."""

    values: np.ndarray  # float64[b_max + 1], nondecreasing

    @property
    def b_max(self) -> int:
        return self.values.size - 1

    def __getitem__(self, b: int) -> float:
        return float(self.values[b])


def opt_table(f, b_max: int) -> OptTable:
    """Optimal f over all x with |x| <= b, for each b in 0..b_max."""
    n = f.n
    if n > ENUMERATION_LIMIT:
        raise ContractError(f"brute force refuses n = {n} > {ENUMERATION_LIMIT}")
    b_max = min(int(b_max), n)
    best = np.full(n + 1, -np.inf)
    for masks in _chunk_masks(n):
        ones = _popcount_masks(masks)
        vals = _batch_values(f, masks)
        np.maximum.at(best, ones, vals)
    # OPT_b is over |x| <= b, so take the running maximum
    return OptTable(values=np.maximum.accumulate(best)[: b_max + 1])


def greedy(f, constraint: Constraint) -> BitString:
    """Marginal-gain greedy under a unit/uniform-weighted constraint.

    Adds the highest-gain feasible item (lowest index on ties) until the
    bound is exhausted; for uniform constraints the result is a
    (1 - 1/e)-approximation.
    """
    if constraint.kind is ConstraintKind.KNAPSACK:
        raise ContractError("plain greedy applies only to unit/uniform constraints")
    n = f.n
    budget = min(constraint.bound // int(constraint.weights[0]), n)
    bits = np.zeros(n, dtype=np.uint8)
    for _ in range(budget):
        best_j = -1
        best_gain = -1.0
        for j in range(n):
            if bits[j]:
                continue
            gain = marginal_gain(f, bits, j)
            if gain > best_gain:
                best_gain = gain
                best_j = j
        if best_j < 0:
            break
        bits[best_j] = 1
    return BitString(bits)


@dataclass
class StructureReport:
    """Outcome of randomized monotonicity/submodularity checking."""

    trials: int
    monotone_violations: list = field(default_factory=list)
    submodular_violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.monotone_violations and not self.submodular_violations


def check_submodular_monotone(f, n: int, trials: int, seed: int,
                              tol: float = 1e-9) -> StructureReport:
    """Sample random chains A ⊆ B and x ∉ B; report any structure violation.

    Monotonicity requires f(A) <= f(B); submodularity requires the marginal
    gain of x at A to be at least the gain at B.  Violating witnesses are
    recorded as (A-indices, B-indices, x, lhs, rhs).
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    if n != f.n:
        raise ContractError(f"ground-set size {n} != objective n {f.n}")
    stream = SplitMix64(seed)
    report = StructureReport(trials=trials)
    for _ in range(trials):
        b_bits = np.zeros(n, dtype=np.uint8)
        while True:
            for j in range(n):
                b_bits[j] = stream.next_u64() >> 63
            if not b_bits.all():
                break
        a_bits = b_bits.copy()
        for j in np.flatnonzero(b_bits):
            if stream.next_u64() >> 63:
                a_bits[j] = 0
        zeros = np.flatnonzero(b_bits == 0)
        x = int(zeros[stream.next_below(zeros.size)])

        fa = f.evaluate(a_bits)
        fb = f.evaluate(b_bits)
        ax = a_bits.copy()
        ax[x] = 1
        bx = b_bits.copy()
        bx[x] = 1
        gain_a = f.evaluate(ax) - fa
        gain_b = f.evaluate(bx) - fb

        witness = (
            tuple(np.flatnonzero(a_bits).tolist()),
            tuple(np.flatnonzero(b_bits).tolist()),
            x,
        )
        if fa > fb + tol:
            report.monotone_violations.append(witness + (fa, fb))
        if gain_a < gain_b - tol:
            report.submodular_violations.append(witness + (gain_a, gain_b))
    return report
