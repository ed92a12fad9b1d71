"""Contracted Voronoi graphs, planar separators and r-divisions."""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from . import embed
from .embed import EmbeddedGraph
from .metric import tie_dijkstra

SEPARATOR_CONSTANT = 4.0
_BRUTE_FORCE_LIMIT = 8


class SeparatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected simple graph on arbitrary integer vertex ids."""

    vertices: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def make(cls, vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> "SimpleGraph":
        es = frozenset((min(a, b), max(a, b)) for a, b in edges if a != b)
        return cls(tuple(sorted(set(vertices))), es)

    @classmethod
    def from_embedded(cls, g: EmbeddedGraph) -> "SimpleGraph":
        return cls.make(range(g.n), ((e.u, e.v) for e in g.edges if not e.infinite))

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for a, b in sorted(self.edges):
            adj[a].append(b)
            adj[b].append(a)
        return adj


@dataclass(frozen=True)
class ContractedGraph(SimpleGraph):
    """Graph obtained by contracting every Voronoi cell onto its site."""

    cells: dict[int, tuple[int, ...]] = field(default_factory=dict, compare=False)
    owner: tuple[int, ...] = ()


def contract_cells(g: EmbeddedGraph, sites: Iterable[int]) -> ContractedGraph:
    sites = sorted(set(sites))
    if not sites:
        raise ValueError("need at least one site")
    forest = tie_dijkstra(g, sites)
    owner = forest.root
    cells: dict[int, list[int]] = {p: [] for p in sites}
    for v, o in enumerate(owner):
        if o >= 0:
            cells[o].append(v)
    edges = set()
    for e in g.edges:
        if e.infinite:
            continue
        a, b = owner[e.u], owner[e.v]
        if a >= 0 and b >= 0 and a != b:
            edges.add((min(a, b), max(a, b)))
    return ContractedGraph(
        tuple(sites), frozenset(edges), {p: tuple(c) for p, c in cells.items()}, tuple(owner)
    )


# -- separators -------------------------------------------------------------------


def _components(vertices: Iterable[int], adj: dict[int, list[int]], removed: set[int]):
    seen = set(removed)
    comps = []
    for s in sorted(vertices):
        if s in seen:
            continue
        seen.add(s)
        comp, stack = [s], [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def _group(comps: list[list[int]], n: int):
    """Split components into ``A`` and ``B`` with both at most ``2n/3``."""
    limit = 2.0 * n / 3.0
    comps = sorted(comps, key=lambda c: (-len(c), c[0]))
    if comps and len(comps[0]) > limit:
        return None
    A: list[int] = []
    B: list[int] = []
    if comps and len(comps[0]) >= n / 3.0:
        A = list(comps[0])
        for c in comps[1:]:
            B.extend(c)
    else:
        for c in comps:
            if len(A) < n / 3.0:
                A.extend(c)
            else:
                B.extend(c)
    if len(A) > limit or len(B) > limit:
        return None
    return sorted(A), sorted(B)


def _evaluate(vertices, adj, sep: set[int], n: int):
    grouped = _group(_components(vertices, adj, sep), n)
    if grouped is None:
        return None
    A, B = grouped
    return A, B, sorted(sep)


def _brute_force(vertices, adj):
    n = len(vertices)
    best = None
    for size in range(n + 1):
        for sep in itertools.combinations(vertices, size):
            res = _evaluate(vertices, adj, set(sep), n)
            if res is None:
                continue
            A, B, S = res
            key = (max(len(A), len(B)), len(S))
            if best is None or key < best[0]:
                best = (key, res)
        if best is not None:
            return best[1]
    raise SeparatorError("no balanced separator found")


def _bfs_levels(root, allowed: set[int], adj) -> dict[int, int]:
    level = {root: 0}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y in allowed and y not in level:
                level[y] = level[x] + 1
                queue.append(y)
    return level


def _planar_embedding(vertices: list[int], edges: list[tuple[int, int]]) -> tuple[EmbeddedGraph, list[int]]:
    """Embedded copy of a planar simple graph; returns ``(graph, local -> original)``."""
    G = nx.Graph()
    G.add_nodes_from(vertices)
    G.add_edges_from(edges)
    ok, emb = nx.check_planarity(G)
    if not ok:
        raise SeparatorError("graph is not planar")
    index = {v: i for i, v in enumerate(vertices)}
    edge_list = []
    eid = {}
    for a, b in sorted((min(index[a], index[b]), max(index[a], index[b])) for a, b in edges):
        eid[(a, b)] = len(edge_list)
        edge_list.append((a, b, 1.0))
    rotation = {}
    for v in vertices:
        i = index[v]
        cw = [index[u] for u in emb.neighbors_cw_order(v)]
        rotation[i] = [eid[(min(i, j), max(i, j))] for j in reversed(cw)]
    return embed.build(len(vertices), edge_list, rotation=rotation), vertices


def _cycle_candidates(vertices, adj, level, l0, l2):
    """Vertex sets of fundamental cycles in the middle band (levels ``l0 < x < l2``)."""
    middle = sorted(v for v in vertices if l0 < level.get(v, -1) < l2)
    if len(middle) < 3:
        return []
    mset = set(middle)
    nodes = list(middle)
    edges = set()
    for a in middle:
        for b in adj[a]:
            if b in mset and a < b:
                edges.add((a, b))
    root = None
    if l0 >= 0:
        root = max(vertices) + 1
        nodes.append(root)
        for a in middle:
            if level[a] == l0 + 1:
                edges.add((a, root))
    # the band can be disconnected; only its largest component matters
    sub = nx.Graph()
    sub.add_nodes_from(nodes)
    sub.add_edges_from(edges)
    comp = max(nx.connected_components(sub), key=lambda c: (len(c), -min(c)))
    if len(comp) < 3:
        return []
    nodes = sorted(comp)
    edges = [e for e in sorted(edges) if e[0] in comp]
    g, back = _planar_embedding(nodes, edges)
    t = embed.triangulate(g)
    start = back.index(root) if root in comp else 0
    adj_t = t.adjacency(finite_only=False)
    parent = {start: -1}
    depth = {start: 0}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y, _ in adj_t[x]:
            if y not in parent:
                parent[y] = x
                depth[y] = depth[x] + 1
                queue.append(y)
    tree = {(min(x, p), max(x, p)) for x, p in parent.items() if p >= 0}
    real = len(back)
    out = []
    seen = set()
    for e in t.edges:
        a, b = min(e.u, e.v), max(e.u, e.v)
        if (a, b) in tree:
            continue
        cyc = set()
        x, y = a, b
        while x != y:
            if depth[x] >= depth[y]:
                cyc.add(x)
                x = parent[x]
            else:
                cyc.add(y)
                y = parent[y]
        cyc.add(x)
        verts = frozenset(back[v] for v in cyc if v < real and back[v] != root)
        if verts not in seen:
            seen.add(verts)
            out.append(verts)
    return out


def _lipton_tarjan(comp, adj):
    n = len(comp)
    root = comp[0]
    level = _bfs_levels(root, set(comp), adj)
    depth = max(level.values())
    layers = [[] for _ in range(depth + 1)]
    for v, l in level.items():
        layers[l].append(v)
    size = lambda l: len(layers[l]) if 0 <= l <= depth else 0  # noqa: E731

    candidates = []
    # single levels around the median are always balanced inside the component
    count = 0
    l1 = 0
    for l in range(depth + 1):
        count += size(l)
        if count >= n / 2.0:
            l1 = l
            break
    for l in range(depth + 1):
        candidates.append(set(layers[l]))
    l0 = min(range(-1, l1 + 1), key=lambda l: (size(l) + 2 * (l1 - l), -l))
    l2 = min(range(l1 + 1, depth + 2), key=lambda l: (size(l) + 2 * (l - l1 - 1), l))
    band = set(layers[l0]) if l0 >= 0 else set()
    if l2 <= depth:
        band |= set(layers[l2])
    candidates.append(band)
    middle = sum(size(l) for l in range(l0 + 1, l2))
    if middle > 2.0 * n / 3.0:
        for cyc in _cycle_candidates(comp, adj, level, l0, l2):
            candidates.append(band | cyc)
    return candidates


def separator(h: SimpleGraph) -> tuple[list[int], list[int], list[int]]:
    """Balanced vertex separator: ``(A, B, sep)`` with no ``A``-``B`` edge."""
    vertices = list(h.vertices)
    n = len(vertices)
    adj = h.adjacency()
    if n == 0:
        return [], [], []
    if n <= _BRUTE_FORCE_LIMIT:
        return _brute_force(vertices, adj)
    res = _evaluate(vertices, adj, set(), n)
    if res is not None:
        return res
    comps = _components(vertices, adj, set())
    big = max(comps, key=len)
    best = None
    for sep in _lipton_tarjan(big, adj):
        res = _evaluate(vertices, adj, sep, n)
        if res is None:
            continue
        key = (len(res[2]), max(len(res[0]), len(res[1])))
        if best is None or key < best[0]:
            best = (key, res)
    if best is None:
        raise SeparatorError("no balanced separator found")
    A, B, sep = best[1]
    if len(sep) > SEPARATOR_CONSTANT * math.sqrt(n):
        raise SeparatorError(f"separator of size {len(sep)} exceeds the bound for n={n}")
    return A, B, sep


# -- r-divisions -------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    id: int
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]
    boundary: frozenset[int]


@dataclass(frozen=True)
class RDivision:
    regions: tuple[Region, ...]
    r: int
    graph: SimpleGraph

    @property
    def total_boundary(self) -> int:
        return sum(len(R.boundary) for R in self.regions)

    def boundary_vertices(self) -> frozenset[int]:
        return frozenset().union(*(R.boundary for R in self.regions)) if self.regions else frozenset()

    def check(self) -> None:
        """Assert the structural invariants of an r-division."""
        seen: dict[tuple[int, int], int] = {}
        for R in self.regions:
            assert len(R.vertices) <= self.r, f"region {R.id} has {len(R.vertices)} > r vertices"
            for e in R.edges:
                assert e[0] in R.vertices and e[1] in R.vertices
                assert e not in seen, f"edge {e} in two regions"
                seen[e] = R.id
        assert set(seen) == set(self.graph.edges), "edges not covered exactly once"
        covered = set().union(*(R.vertices for R in self.regions)) if self.regions else set()
        assert covered == set(self.graph.vertices), "vertices not covered"
        count: dict[int, int] = {}
        for R in self.regions:
            for v in R.vertices:
                count[v] = count.get(v, 0) + 1
        for R in self.regions:
            assert R.boundary == frozenset(v for v in R.vertices if count[v] >= 2)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "regions": {
                str(R.id): {"vertices": sorted(R.vertices), "boundary": sorted(R.boundary)}
                for R in self.regions
            },
            "total_boundary": self.total_boundary,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)


def _edge_split(vertices: list[int], edges: list[tuple[int, int]], adj):
    order = {}
    for s in vertices:
        if s in order:
            continue
        for v in _bfs_levels(s, set(vertices), adj):
            order.setdefault(v, len(order))
    es = sorted(edges, key=lambda e: (min(order[e[0]], order[e[1]]), max(order[e[0]], order[e[1]])))
    half = len(es) // 2
    first, second = es[:half], es[half:]
    v1 = {x for e in first for x in e}
    v2 = {x for e in second for x in e}
    for v in vertices:
        if v not in v1 and v not in v2:
            (v1 if len(v1) <= len(v2) else v2).add(v)
    return [(sorted(v1), first), (sorted(v2), second)]


def r_division(h: SimpleGraph, r: int) -> RDivision:
    n = len(h.vertices)
    r = max(2, min(int(r), max(n, 1))) if n > 1 else 1
    pieces = []
    stack = [(list(h.vertices), sorted(h.edges))]
    while stack:
        verts, edges = stack.pop()
        if len(verts) <= r:
            pieces.append((verts, edges))
            continue
        sub = SimpleGraph.make(verts, edges)
        adj = sub.adjacency()
        children = None
        try:
            A, B, sep = separator(sub)
            sA = set(A) | set(sep)
            sB = set(B) | set(sep)
            sep_set = set(sep)
            eA = [e for e in edges if e[0] in sA and e[1] in sA]
            eB = [e for e in edges if e[0] in sB and e[1] in sB and not (e[0] in sep_set and e[1] in sep_set)]
            if len(sA) < len(verts) and len(sB) < len(verts):
                children = [(sorted(sA), eA), (sorted(sB), eB)]
        except SeparatorError:
            children = None
        if children is None:
            children = _edge_split(verts, edges, adj)
            if any(len(c[0]) >= len(verts) for c in children):
                children = [([a, b], [(a, b)]) for a, b in edges]
                touched = {x for e in edges for x in e}
                rest = [v for v in verts if v not in touched]
                for i in range(0, len(rest), r):
                    children.append((rest[i:i + r], []))
        stack.extend(reversed(children))

    # drop edgeless pieces whose vertices are all covered elsewhere
    cover: dict[int, int] = {}
    for verts, _ in pieces:
        for v in verts:
            cover[v] = cover.get(v, 0) + 1
    kept = []
    for verts, edges in pieces:
        if not edges and all(cover[v] >= 2 for v in verts):
            for v in verts:
                cover[v] -= 1
            continue
        kept.append((verts, edges))
    regions = []
    for i, (verts, edges) in enumerate(kept):
        boundary = frozenset(v for v in verts if cover[v] >= 2)
        regions.append(Region(i, frozenset(verts), frozenset(edges), boundary))
    div = RDivision(tuple(regions), r, h)
    div.check()
    return div
