"""Shortest paths with deterministic tie-breaking, and distance levels."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .embed import INFINITE, EmbeddedGraph

UNREACHABLE = -1


@dataclass(frozen=True)
class ShortestPathTree:
    """Shortest-path forest grown from one or more sources.

    ``key(v)`` is the tie-break key ``(distance, path)`` where ``path`` lists
    the vertex ids from the root to ``v``; keys compare lexicographically, so
    among equal-length paths the one with the smallest vertex-id sequence
    wins, and among equally close roots the smallest root id wins.
    """

    sources: tuple[int, ...]
    dist: tuple[float, ...]
    parent: tuple[int, ...]
    parent_edge: tuple[int, ...]
    root: tuple[int, ...]
    _paths: tuple = field(repr=False, compare=False)

    @property
    def source(self) -> int:
        return self.sources[0]

    def reachable(self, v: int) -> bool:
        return self.root[v] != UNREACHABLE

    def path(self, v: int) -> tuple[int, ...]:
        """Vertices from the root to ``v``."""
        return self._paths[v]

    def key(self, v: int) -> tuple[float, tuple[int, ...]]:
        return (self.dist[v], self._paths[v])

    def tree_edges(self) -> set[int]:
        return {e for e in self.parent_edge if e != UNREACHABLE}


def tie_dijkstra(g: EmbeddedGraph, sources: Iterable[int]) -> ShortestPathTree:
    """Multi-source Dijkstra ordered by ``(distance, vertex path)`` keys.

    Infinite edges are never relaxed.
    """
    sources = tuple(sorted(set(sources)))
    n = g.n
    best: list = [None] * n
    parent = [UNREACHABLE] * n
    parent_edge = [UNREACHABLE] * n
    done = [False] * n
    heap = []
    for s in sources:
        best[s] = (0.0, (s,))
        heap.append((0.0, (s,), s, UNREACHABLE, UNREACHABLE))
    heapq.heapify(heap)
    adj = g.adjacency(finite_only=True)
    edges = g.edges
    while heap:
        d, path, x, par, pe = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        parent[x] = par
        parent_edge[x] = pe
        for y, e in adj[x]:
            if done[y]:
                continue
            nd = d + edges[e].length
            cand = (nd, path + (y,))
            if best[y] is None or cand < best[y]:
                best[y] = cand
                heapq.heappush(heap, (nd, cand[1], y, x, e))
    dist = tuple(b[0] if b is not None else INFINITE for b in best)
    paths = tuple(b[1] if b is not None else () for b in best)
    root = tuple(p[0] if p else UNREACHABLE for p in paths)
    return ShortestPathTree(sources, dist, tuple(parent), tuple(parent_edge), root, paths)


def shortest_path_tree(g: EmbeddedGraph, source: int) -> ShortestPathTree:
    return tie_dijkstra(g, [source])


def _csr(g: EmbeddedGraph) -> csr_matrix:
    rows, cols, vals = [], [], []
    for e in g.edges:
        if e.infinite:
            continue
        rows += [e.u, e.v]
        cols += [e.v, e.u]
        vals += [e.length, e.length]
    return csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))


def distance_rows(g: EmbeddedGraph, sources: Sequence[int]) -> np.ndarray:
    """Numeric distances, one row per source (``inf`` when unreachable)."""
    if "csr" not in g._cache:
        g._cache["csr"] = _csr(g)
    if len(sources) == 0:
        return np.zeros((0, g.n))
    return np.atleast_2d(
        _csgraph_dijkstra(g._cache["csr"], directed=False, indices=list(sources))
    )


def all_pairs(g: EmbeddedGraph) -> np.ndarray:
    return distance_rows(g, list(range(g.n)))


# -- levels ------------------------------------------------------------------


class LevelScale:
    """Distance levels base ``1 + eps`` with a cached power table.

    ``level(c)`` is the least ``l >= 0`` with ``c < (1+eps)**l``.
    """

    def __init__(self, eps: float, L: int = 1):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.eps = eps
        self.L = max(int(L), 1)
        self._powers = [1.0]

    def power(self, i: int) -> float:
        while len(self._powers) <= i:
            self._powers.append(self._powers[-1] * (1.0 + self.eps))
        return self._powers[i]

    def level(self, c: float) -> int:
        if math.isinf(c) or math.isnan(c):
            raise ValueError("level is undefined for infinite distances")
        if c < 0:
            raise ValueError("level expects a nonnegative value")
        if c < 1.0:
            return 0
        guess = max(int(math.ceil(math.log(c) / math.log1p(self.eps))), 0)
        while self.power(guess) <= c:
            guess += 1
        while guess > 0 and self.power(guess - 1) > c:
            guess -= 1
        return guess

    def portal_offset(self, index: int) -> float:
        """Distance from the site of portal ``index`` along its spoke."""
        return 0.0 if index == 0 else self.power(index - 1)


def level(c: float, eps: float) -> int:
    return LevelScale(eps).level(c)


# -- length transforms --------------------------------------------------------


def scale_lengths(g: EmbeddedGraph, factor: float) -> EmbeddedGraph:
    if not factor > 0:
        raise ValueError("scale factor must be positive")
    if factor == 1.0:
        return g
    return g.with_lengths([e.length if e.infinite else e.length * factor for e in g.edges])


def clip_long_edges(g: EmbeddedGraph, threshold: float) -> EmbeddedGraph:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if all(e.infinite or e.length <= threshold for e in g.edges):
        return g
    return g.with_lengths(
        [INFINITE if (not e.infinite and e.length > threshold) else e.length for e in g.edges]
    )
