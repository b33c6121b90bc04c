"""Monotone submodular objectives: graph coverage and a modular fixture.

Coverage of a selected vertex set is the size of the union of the closed
neighborhoods of the selected vertices.  Evaluation here is the baseline
from-scratch route (bitmask union + popcount); the run engine keeps an
incremental per-member cache that must agree with this exactly, which the
reference-run tests check.
"""

from __future__ import annotations

import numpy as np

from .core import BitString, ContractError

_HAS_BITWISE_COUNT = hasattr(np, "bitwise_count")
if not _HAS_BITWISE_COUNT:
    _POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def popcount_words(words: np.ndarray) -> int:
    """Total number of set bits in a uint64 array."""
    if _HAS_BITWISE_COUNT:
        return int(np.bitwise_count(words).sum())
    return int(_POP8[words.view(np.uint8)].sum())


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 uint8 vector into little-endian uint64 words."""
    n = bits.size
    nwords = (n + 63) // 64
    padded = np.zeros(nwords * 64, dtype=np.uint8)
    padded[:n] = bits
    # bitorder='little' so bit j of word w is element w*64+j
    return np.packbits(padded, bitorder="little").view(np.uint64)


def _as_bits(x, n: int) -> np.ndarray:
    bits = x.bits if isinstance(x, BitString) else np.asarray(x, dtype=np.uint8)
    if bits.size != n:
        raise ContractError(f"solution length {bits.size} != ground-set size {n}")
    return bits


class CoverageObjective:
    """Max-coverage objective over a graph's closed neighborhoods.

    closed neighborhood of v = {v} union neighbors(v); a selected vertex
    covers itself plus its neighbors.  Stores both a packed bit-mask per
    vertex (for union evaluation) and a CSR adjacency (for the run engine's
    incremental cache).
    """

    kind = "coverage"

    def __init__(self, adjacency: list):
        n = len(adjacency)
        if n == 0:
            raise ContractError("graph must have at least one vertex")
        self.n = n
        self.nwords = (n + 63) // 64
        indptr = np.zeros(n + 1, dtype=np.int64)
        masks = np.zeros((n, self.nwords), dtype=np.uint64)
        closed = []
        for v, nbrs in enumerate(adjacency):
            cn = np.union1d(np.asarray(nbrs, dtype=np.int64), [v]).astype(np.int32)
            if cn[0] < 0 or cn[-1] >= n:
                raise ContractError(f"neighbor id out of range for vertex {v}")
            closed.append(cn)
            indptr[v + 1] = indptr[v] + cn.size
            w = cn >> 6
            b = cn & 63
            np.bitwise_or.at(masks[v], w, np.uint64(1) << b.astype(np.uint64))
        self.indptr = indptr
        self.indices = np.concatenate(closed).astype(np.int32)
        self.masks = masks
        self.masks.flags.writeable = False

    @classmethod
    def from_graph(cls, graph) -> "CoverageObjective":
        return cls(graph.adjacency)

    def closed_neighborhood(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def evaluate(self, x) -> float:
        """Coverage of x: |union of closed neighborhoods of selected vertices|."""
        bits = _as_bits(x, self.n)
        selected = np.flatnonzero(bits)
        if selected.size == 0:
            return 0.0
        union = np.bitwise_or.reduce(self.masks[selected], axis=0)
        return float(popcount_words(union))

    def max_value(self) -> float:
        return float(self.n)


class ModularObjective:
    """Additive objective f(x) = sum_j item_values[j] * x[j].

    Modular functions satisfy the submodularity inequality with equality,
    which makes this the standard trivially-submodular test fixture.
    """

    kind = "modular"

    def __init__(self, item_values):
        vals = np.asarray(item_values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ContractError("item_values must be a nonempty 1-d sequence")
        if np.any(vals < 0):
            raise ContractError("item_values must be nonnegative")
        self.item_values = vals.copy()
        self.item_values.flags.writeable = False
        self.n = vals.size

    def evaluate(self, x) -> float:
        bits = _as_bits(x, self.n)
        return float(self.item_values @ bits.astype(np.float64))

    def max_value(self) -> float:
        return float(self.item_values.sum())


def evaluate(f, x) -> float:
    """Evaluate objective handle f at solution x."""
    return f.evaluate(x)


def marginal_gain(f, x, j: int) -> float:
    """f(x + {j}) - f(x) for an item j not already selected in x."""
    bits = _as_bits(x, f.n)
    if bits[j]:
        raise ContractError(f"item {j} already selected")
    with_j = bits.copy()
    with_j[j] = 1
    return f.evaluate(with_j) - f.evaluate(bits)
