"""
Time-varying digraphs and column-stochastic push-sum weights.

An edge ``(j, i)`` means agent ``j`` transmits to agent ``i``. Self-loops are
never stored; every neighborhood implicitly contains the node itself.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Digraph:
    node_count: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphError("node_count must be positive")
        edges = frozenset((int(j), int(i)) for j, i in self.edges if j != i)
        for j, i in edges:
            if not (0 <= j < self.node_count and 0 <= i < self.node_count):
                raise GraphError(f"edge {(j, i)} out of range for {self.node_count} nodes")
        object.__setattr__(self, "edges", edges)

    def out_neighbors(self, j):
        """Receivers of ``j``, including ``j`` itself."""
        return sorted({i for jj, i in self.edges if jj == j} | {j})

    def in_neighbors(self, i):
        return sorted({j for j, ii in self.edges if ii == i} | {i})

    def out_degrees(self):
        """``d_j`` = number of out-neighbors of ``j`` counting ``j``."""
        d = np.ones(self.node_count, dtype=int)
        for j, _ in self.edges:
            d[j] += 1
        return d

    def adjacency(self):
        """Boolean matrix with ``adj[i, j]`` set when ``j`` sends to ``i``."""
        adj = np.zeros((self.node_count, self.node_count), dtype=bool)
        for j, i in self.edges:
            adj[i, j] = True
        return adj


def is_strongly_connected(graph):
    if graph.node_count == 1:
        return True
    n_comp, _ = connected_components(
        csr_matrix(graph.adjacency()), directed=True, connection="strong"
    )
    return n_comp == 1


class GraphSchedule:
    """
    Deterministic map from round index to a :class:`Digraph`.

    Parameters
    ----------
    generator : callable
        ``generator(n) -> Digraph``; must be a pure function of ``n``.
    node_count : int
    window : int
        Connectivity window ``B`` the schedule is claimed to satisfy.
    """

    def __init__(self, generator: Callable[[int], Digraph], node_count: int, window: int = 1):
        if window < 1:
            raise GraphError("window must be a positive integer")
        self.generator = generator
        self.node_count = node_count
        self.window = window

    def __call__(self, n):
        return self.generator(n)

    @classmethod
    def static(cls, graph):
        return cls(lambda n: graph, graph.node_count, 1)

    @classmethod
    def cyclic(cls, graphs: Sequence[Digraph], window=None):
        graphs = tuple(graphs)
        return cls(lambda n: graphs[n % len(graphs)], graphs[0].node_count, window or len(graphs))


def _round_graph(node_count, out_degree, seed, n):
    if node_count == 1:
        return Digraph(1)
    rng = np.random.default_rng([seed, n])
    order = rng.permutation(node_count)
    succ = np.empty(node_count, dtype=int)
    succ[order] = np.roll(order, -1)
    edges = set()
    for j in range(node_count):
        edges.add((j, int(succ[j])))
        if out_degree > 1:
            candidates = [i for i in range(node_count) if i != j and i != succ[j]]
            extra = rng.choice(candidates, size=out_degree - 1, replace=False)
            edges.update((j, int(i)) for i in extra)
    return Digraph(node_count, frozenset(edges))


def generate_schedule(node_count, out_degree, seed):
    """
    Random time-varying digraphs, each strongly connected on its own.

    Every round draws a fresh Hamiltonian cycle through all nodes and gives each
    node ``out_degree - 1`` further distinct random receivers, so every node has
    exactly ``out_degree`` out-neighbors besides itself.
    """
    if node_count < 1:
        raise GraphError("node_count must be positive")
    if node_count > 1 and not 1 <= out_degree < node_count:
        raise GraphError(
            f"out_degree must lie in [1, {node_count - 1}] for {node_count} nodes, got {out_degree}"
        )
    return GraphSchedule(
        lambda n: _round_graph(node_count, out_degree, seed, n), node_count, window=1
    )


def union_graph(graphs):
    graphs = list(graphs)
    edges = frozenset().union(*(g.edges for g in graphs))
    return Digraph(graphs[0].node_count, edges)


def is_b_strongly_connected(schedule, B, horizon):
    """True iff every length-``B`` window starting at a multiple of ``B`` before ``horizon`` has a strongly connected union."""
    if B < 1 or horizon < B:
        raise GraphError("need B >= 1 and horizon >= B")
    for start in range(0, horizon - B + 1, B):
        if not is_strongly_connected(union_graph(schedule(t) for t in range(start, start + B))):
            return False
    return True


def build_weights(graph):
    """
    Out-degree push-sum weights: ``a[i, j] = 1 / d_j`` for each receiver ``i`` of ``j``.

    Columns sum to one and every diagonal entry is at least ``1 / node_count``.
    """
    adj = graph.adjacency()
    np.fill_diagonal(adj, True)
    d = adj.sum(axis=0)
    return adj / d[None, :]
