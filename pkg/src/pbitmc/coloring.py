"""Vertex colorings for conflict-free parallel p-bit updates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class Coloring:
    color: np.ndarray
    num_colors: int


@dataclass
class TwoColorFailure:
    """Witness that the graph is not bipartite: an odd closed walk."""

    odd_cycle: list[int]

    def __bool__(self):
        return False


def _as_adjacency(graph) -> tuple[int, list[np.ndarray]]:
    if hasattr(graph, "weights"):            # ReplicatedNetwork
        n = graph.num_pbits
        w = graph.weights
        return n, [w.indices[w.indptr[v]:w.indptr[v + 1]] for v in range(n)]
    if hasattr(graph, "edge_i"):             # LatticeGraph
        n = graph.num_spins
        pairs = zip(graph.edge_i.tolist(), graph.edge_j.tolist())
    else:                                    # (n, edges) tuple
        n, edges = graph
        pairs = edges
    adj = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    return n, [np.asarray(sorted(set(x)), dtype=np.int64) for x in adj]


def _vertex_sublattice(graph, n: int) -> np.ndarray | None:
    if hasattr(graph, "base"):
        return np.tile(graph.base.sublattice, graph.r)
    if hasattr(graph, "sublattice"):
        return graph.sublattice
    return None


def two_color(graph) -> Coloring | TwoColorFailure:
    """Breadth-first 2-coloring; returns an odd-cycle witness on failure."""
    n, adj = _as_adjacency(graph)
    color = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    queue.append(v)
                elif color[v] == color[u]:
                    return TwoColorFailure(_odd_cycle(u, int(v), parent))
    used = len(np.unique(color))
    return Coloring(color=color, num_colors=used)


def _odd_cycle(u: int, v: int, parent: np.ndarray) -> list[int]:
    anc_u = [u]
    while parent[anc_u[-1]] >= 0:
        anc_u.append(int(parent[anc_u[-1]]))
    in_u = {x: i for i, x in enumerate(anc_u)}
    path_v = [v]
    while path_v[-1] not in in_u:
        path_v.append(int(parent[path_v[-1]]))
    lca = path_v[-1]
    cycle = anc_u[:in_u[lca] + 1] + path_v[-2::-1]
    return cycle


def greedy_color(graph, order: np.ndarray | None = None) -> Coloring:
    """First-fit greedy coloring; C <= max_degree + 1.

    The default order sorts vertices by sublattice label then index, which
    lands on exactly three colors for the triangular lattices.
    """
    n, adj = _as_adjacency(graph)
    if order is None:
        sub = _vertex_sublattice(graph, n)
        if sub is not None:
            order = np.lexsort((np.arange(n), np.asarray(sub)))
        else:
            order = np.arange(n)
    order = np.asarray(order)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the vertices")
    color = np.full(n, -1, dtype=np.int64)
    for v in order.tolist():
        taken = {int(color[u]) for u in adj[v] if color[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    return Coloring(color=color, num_colors=int(color.max()) + 1)


def verify_coloring(graph, coloring: Coloring) -> bool:
    """True iff no edge is monochromatic and colors are 0..C-1, all used."""
    n, adj = _as_adjacency(graph)
    color = np.asarray(coloring.color)
    if color.shape != (n,):
        return False
    c = coloring.num_colors
    if color.min() < 0 or color.max() >= c:
        return False
    if len(np.unique(color)) != c:
        return False
    for u in range(n):
        cu = color[u]
        if np.any(color[adj[u]] == cu):
            return False
    return True


def color_groups(coloring: Coloring) -> list[np.ndarray]:
    """Vertex index arrays per color, ascending color order."""
    return [np.flatnonzero(coloring.color == c)
            for c in range(coloring.num_colors)]
