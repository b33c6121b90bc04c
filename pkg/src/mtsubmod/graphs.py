"""Graph ingestion and the three constraint regimes of the experiments.

Supported input formats:
  - edge-list: ASCII lines "u v" with 1-indexed positive vertex ids,
    comment lines starting with '%' or '#'.  Appearing ids are compacted
    to dense 0-indexed ids in sorted order.
  - matrix-market: "%%MatrixMarket" header, optional size line
    "rows cols nnz", then edge lines; a weight column is ignored.  The
    declared row count is authoritative, so vertices that appear in no
    edge are retained as isolated.

Both are normalized to simple undirected graphs: self-loops dropped,
duplicate/reversed edges collapsed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Constraint, ContractError
from .rng import SplitMix64


class GraphParseError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with sorted per-vertex neighbor lists."""

    n: int
    adjacency: tuple

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    def max_closed_neighborhood(self) -> int:
        """max over v of |{v} union neighbors(v)| = max degree + 1."""
        return int(self.degrees.max()) + 1

    def canonical_edges(self) -> list[tuple[int, int]]:
        edges = []
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    edges.append((u, v))
        return edges


def _build_graph(n: int, edges: set) -> Graph:
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    adjacency = tuple(np.array(sorted(a), dtype=np.int32) for a in adj)
    return Graph(n=n, adjacency=adjacency)


def _parse_edge_token(tok: str, line_no: int) -> int:
    try:
        # some exports write ids as floats ("12.0")
        val = int(tok)
    except ValueError:
        try:
            fval = float(tok)
        except ValueError:
            raise GraphParseError(f"malformed vertex id {tok!r}", line_no) from None
        val = int(fval)
        if val != fval:
            raise GraphParseError(f"non-integer vertex id {tok!r}", line_no)
    return val


def _parse_edge_list(lines) -> Graph:
    raw_edges = []
    ids = set()
    for line_no, line in lines:
        parts = line.split()
        if len(parts) < 2:
            raise GraphParseError(f"expected 'u v', got {line.strip()!r}", line_no)
        u = _parse_edge_token(parts[0], line_no)
        v = _parse_edge_token(parts[1], line_no)
        if u < 1 or v < 1:
            raise GraphParseError(f"vertex ids must be >= 1, got {u} {v}", line_no)
        raw_edges.append((u, v))
        ids.add(u)
        ids.add(v)
    if not raw_edges:
        raise GraphParseError("no edges found")
    remap = {vid: i for i, vid in enumerate(sorted(ids))}
    edges = set()
    for u, v in raw_edges:
        a, b = remap[u], remap[v]
        if a == b:
            continue
        edges.add((min(a, b), max(a, b)))
    return _build_graph(len(remap), edges)


def _parse_matrix_market(lines) -> Graph:
    it = iter(lines)
    size = None
    edges = set()
    n = None
    for line_no, line in it:
        parts = line.split()
        if size is None:
            if len(parts) < 2:
                raise GraphParseError(
                    f"expected size line 'rows cols [nnz]', got {line.strip()!r}", line_no
                )
            rows = _parse_edge_token(parts[0], line_no)
            cols = _parse_edge_token(parts[1], line_no)
            if rows < 1 or cols < 1:
                raise GraphParseError("declared size must be positive", line_no)
            n = max(rows, cols)
            size = (rows, cols)
            continue
        if len(parts) < 2:
            raise GraphParseError(f"expected 'u v [w]', got {line.strip()!r}", line_no)
        u = _parse_edge_token(parts[0], line_no)
        v = _parse_edge_token(parts[1], line_no)
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphParseError(
                f"vertex id out of declared range [1, {n}]: {u} {v}", line_no
            )
        if u == v:
            continue
        a, b = u - 1, v - 1
        edges.add((min(a, b), max(a, b)))
    if size is None:
        raise GraphParseError("missing MatrixMarket size line")
    return _build_graph(n, edges)


def parse_graph(path, format: str = "auto") -> Graph:
    """Parse an undirected graph file.

    format is one of {"edge-list", "matrix-market", "auto"}; auto sniffs a
    leading "%%MatrixMarket" banner.
    """
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise GraphParseError(f"cannot read {path}: {exc}") from exc

    if format == "auto":
        format = "edge-list"
        for line in raw:
            if line.strip():
                if line.lstrip().startswith("%%MatrixMarket"):
                    format = "matrix-market"
                break

    content = []
    for i, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("%", "#")):
            continue
        content.append((i, stripped))
    if not content:
        raise GraphParseError("file has no data lines")

    if format == "edge-list":
        return _parse_edge_list(content)
    if format == "matrix-market":
        return _parse_matrix_market(content)
    raise ContractError(f"unknown graph format {format!r}")


def write_edge_list(graph: Graph, path) -> None:
    """Serialize to the canonical 1-indexed edge list (u < v, sorted)."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in graph.canonical_edges():
            fh.write(f"{u + 1} {v + 1}\n")


def induced_subgraph(graph: Graph, vertices) -> Graph:
    """Induced subgraph on the given vertices (relabeled 0..len-1 in sorted order)."""
    keep = sorted(set(int(v) for v in vertices))
    if not keep:
        raise ContractError("vertex set must be nonempty")
    remap = {v: i for i, v in enumerate(keep)}
    edges = set()
    for v in keep:
        for u in graph.adjacency[v]:
            if u in remap and v < u:
                edges.add((remap[v], remap[u]))
    return _build_graph(len(keep), edges)


def random_gnp_graph(n: int, p: float, seed: int) -> Graph:
    """Seeded G(n, p) graph via the package RNG (platform-stable).

    splitmix64 is counter-based, so the per-pair draws vectorize: draw t
    is mix(seed + (t+1)*golden) for pairs enumerated (0,1), (0,2), ...
    """
    golden = np.uint64(0x9E3779B97F4A7C15)
    edges = set()
    base = 0
    for u in range(n - 1):
        row = n - 1 - u
        t = np.arange(base + 1, base + row + 1, dtype=np.uint64)
        states = np.uint64(seed) + golden * t
        z = (states ^ (states >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
        hit = np.flatnonzero((z >> np.uint64(11)) * (2.0 ** -53) < p)
        for off in hit:
            edges.add((u, u + 1 + int(off)))
        base += row
    return _build_graph(n, edges)


REGIMES = ("unit", "random-linear", "degree-linear")

# random-linear scaling: bounds are multiplied by 100 and per-item weights are
# drawn as ceil(U(50, 150)) on the half-open interval [50, 150), giving
# integers in [50, 150]; reports keep the original nominal bound as the label.
RANDOM_LINEAR_BOUND_SCALE = 100
RANDOM_LINEAR_LOW = 50
RANDOM_LINEAR_HIGH = 150


def sample_random_linear_weights(n: int, seed: int) -> np.ndarray:
    # vectorized splitmix64 stream (draw j is mix(seed + (j+1)*golden))
    golden = np.uint64(0x9E3779B97F4A7C15)
    states = np.uint64(seed) + golden * np.arange(1, n + 1, dtype=np.uint64)
    z = (states ^ (states >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    unit = (z >> np.uint64(11)) * (2.0 ** -53)
    span = RANDOM_LINEAR_HIGH - RANDOM_LINEAR_LOW
    return np.ceil(RANDOM_LINEAR_LOW + unit * span).astype(np.int64)


def build_constraint(graph: Graph, regime: str, bound: int, seed: int = 0) -> Constraint:
    """Construct one constraint for a regime.

    unit: all weights 1, bound unchanged.
    random-linear: integer weights in [50, 150] from the seeded stream,
        bound scaled by 100.
    degree-linear: weights[v] = deg(v), bound unchanged (isolated vertices
        get weight 0 and stay cost-free).
    """
    bound = int(bound)
    if bound <= 0:
        raise ContractError("bound must be positive")
    if regime == "unit":
        return Constraint(np.ones(graph.n, dtype=np.int64), bound)
    if regime == "random-linear":
        weights = sample_random_linear_weights(graph.n, seed)
        return Constraint(weights, bound * RANDOM_LINEAR_BOUND_SCALE)
    if regime == "degree-linear":
        return Constraint(graph.degrees, bound)
    raise ContractError(f"unknown regime {regime!r}; expected one of {REGIMES}")
