"""Undirected simple graph with stable integer node ids.

Node ids are dense integers handed out in creation order and never reused,
so a history of (new, anchor) pairs stays meaningful while nodes are being
removed.  External string labels live in a sidecar list owned by the I/O
layer, not here.
"""
from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np


class Graph:
    """Adjacency-set graph.

    ``adj[u]`` is the set of neighbours of ``u``.  Symmetry and the absence
    of self-loops are maintained by every mutating method.
    """

    __slots__ = ("adj", "_next_id")

    def __init__(self) -> None:
        self.adj: dict[int, set[int]] = {}
        self._next_id = 0

    # construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Graph on nodes ``0..n-1`` with the given edges."""
        g = cls()
        for _ in range(n):
            g.add_node()
        for u, v in edges:
            g.add_edge(u, v)
        return g

    @classmethod
    def from_adjacency(cls, matrix) -> "Graph":
        a = np.asarray(matrix)
        n = a.shape[0]
        iu, ju = np.nonzero(np.triu(a, 1))
        return cls.from_edges(n, zip(iu.tolist(), ju.tolist()))

    def copy(self) -> "Graph":
        g = Graph()
        g.adj = {u: set(nb) for u, nb in self.adj.items()}
        g._next_id = self._next_id
        return g

    # node operations ----------------------------------------------------

    def add_node(self) -> int:
        u = self._next_id
        self._next_id += 1
        self.adj[u] = set()
        return u

    def remove_node(self, v: int) -> "Graph":
        nbrs = self._get(v)
        for w in nbrs:
            self.adj[w].discard(v)
        del self.adj[v]
        return self

    def neighbors_excluding(self, u: int, v: int) -> set[int]:
        """Neighbours of ``u`` other than ``v``."""
        self._get(v)
        return self._get(u) - {v}

    # edge operations ----------------------------------------------------

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ValueError(f"self-loop on node {u} not allowed")
        self._get(u).add(v)
        self._get(v).add(u)

    def remove_edge(self, u: int, v: int) -> None:
        self._get(u).discard(v)
        self._get(v).discard(u)

    def toggle_edge(self, u: int, v: int) -> bool:
        """Flip the (u, v) edge; return whether it exists afterwards."""
        if self.has_edge(u, v):
            self.remove_edge(u, v)
            return False
        self.add_edge(u, v)
        return True

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._get(u) and u != v

    # queries ------------------------------------------------------------

    def degree(self, u: int) -> int:
        return len(self._get(u))

    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.adj.values()) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in sorted(self.adj):
            for v in sorted(self.adj[u]):
                if u < v:
                    yield u, v

    def nodes(self) -> list[int]:
        return sorted(self.adj)

    def to_numpy(self, order: list[int] | None = None) -> np.ndarray:
        """Dense 0/1 adjacency matrix, rows in ``order`` (default sorted ids)."""
        order = self.nodes() if order is None else order
        pos = {u: i for i, u in enumerate(order)}
        a = np.zeros((len(order), len(order)), dtype=np.float64)
        for u in order:
            i = pos[u]
            for v in self.adj[u]:
                a[i, pos[v]] = 1.0
        return a

    def induced_subgraph(self, keep: Iterable[int]) -> "Graph":
        """Induced subgraph relabelled to ``0..k-1`` in the order of ``keep``."""
        keep = list(keep)
        pos = {u: i for i, u in enumerate(keep)}
        if len(pos) != len(keep):
            raise ValueError("duplicate node in subgraph selection")
        edges = []
        for u in keep:
            for v in self._get(u):
                if v in pos and pos[u] < pos[v]:
                    edges.append((pos[u], pos[v]))
        return Graph.from_edges(len(keep), edges)

    def check_invariants(self) -> None:
        for u, nb in self.adj.items():
            assert u not in nb, f"self-loop at {u}"
            for v in nb:
                assert v in self.adj, f"dangling neighbour {v} of {u}"
                assert u in self.adj[v], f"asymmetric edge {u}-{v}"

    def _get(self, u: int) -> set[int]:
        try:
            return self.adj[u]
        except KeyError:
            raise KeyError(f"unknown node {u!r}") from None

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, u: object) -> bool:
        return u in self.adj

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.adj == other.adj

    def __repr__(self) -> str:
        return f"Graph(n={len(self)}, m={self.edge_count()})"


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def empty_graph(n: int) -> Graph:
    return Graph.from_edges(n, ())
