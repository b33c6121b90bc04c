import numpy as np
import pytest

from mtsubmod.datasets import find_graph_file
from mtsubmod.graphs import Graph


def graph_from_edges(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return Graph(n=n, adjacency=tuple(np.array(sorted(a), dtype=np.int32) for a in adj))


@pytest.fixture
def path3():
    # path graph 1-2-3 (0-indexed 0-1-2)
    return graph_from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star5():
    # star with center 0 and four leaves
    return graph_from_edges(5, [(0, i) for i in range(1, 5)])


def require_graph(name):
    path = find_graph_file(name)
    if path is None:
        pytest.skip(
            f"benchmark graph {name} not present in the data directory; "
            f"run `mt-submod fetch {name}` (needs network) or place the file there"
        )
    return path
