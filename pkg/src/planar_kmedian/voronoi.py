"""Voronoi partitions, diagrams and diamonds of triangulated plane graphs."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .embed import EmbeddedGraph, dart_head, dart_tail
from .metric import ShortestPathTree, shortest_path_tree, tie_dijkstra


class DegenerateSites(ValueError):
    """Fewer than three sites: the diagram has no branching nodes."""


class DiagramError(RuntimeError):
    pass


@dataclass(frozen=True)
class VoronoiPartition:
    sites: tuple[int, ...]
    forest: ShortestPathTree

    @property
    def owner(self) -> tuple[int, ...]:
        return self.forest.root

    @property
    def dist(self) -> tuple[float, ...]:
        return self.forest.dist

    def cell(self, p: int) -> list[int]:
        return [v for v, o in enumerate(self.forest.root) if o == p]

    def cells(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {p: [] for p in self.sites}
        for v, o in enumerate(self.forest.root):
            out[o].append(v)
        return out

    def tree_edges(self, p: int | None = None) -> set[int]:
        return {
            e
            for v, e in enumerate(self.forest.parent_edge)
            if e >= 0 and (p is None or self.forest.root[v] == p)
        }

    def spoke(self, u: int) -> tuple[int, ...]:
        """Vertices of the shortest path from the owning site to ``u``."""
        return self.forest.path(u)

    def spoke_edges(self, u: int) -> list[int]:
        out = []
        pe = self.forest.parent_edge
        par = self.forest.parent
        while pe[u] >= 0:
            out.append(pe[u])
            u = par[u]
        out.reverse()
        return out


def voronoi_partition(g: EmbeddedGraph, sites: Iterable[int]) -> VoronoiPartition:
    sites = tuple(sorted(set(sites)))
    if not sites:
        raise ValueError("site set must be nonempty")
    forest = tie_dijkstra(g, sites)
    if any(r < 0 for r in forest.root):
        raise ValueError("some vertices are not reachable from any site")
    return VoronoiPartition(sites, forest)


@dataclass(frozen=True)
class DiagramEdge:
    """A diagram edge realised by the dual path ``faces[0] .. faces[-1]``.

    ``darts[i]`` is the primal dart crossed between ``faces[i]`` and
    ``faces[i+1]``, oriented so that ``faces[i]`` lies on its left; its tail
    is on side 0 of the edge and its head on side 1.
    """

    id: int
    faces: tuple[int, ...]
    darts: tuple[int, ...]

    @property
    def ends(self) -> tuple[int, int]:
        return self.faces[0], self.faces[-1]

    @property
    def is_loop(self) -> bool:
        return self.faces[0] == self.faces[-1]


@dataclass(frozen=True)
class VoronoiDiagram:
    partition: VoronoiPartition
    branching: tuple[int, ...]
    edges: tuple[DiagramEdge, ...]
    sides: tuple[tuple[int, int], ...]  # sites on side 0 / side 1 of each edge

    def degree(self, node: int) -> int:
        return sum((e.faces[0] == node) + (e.faces[-1] == node) for e in self.edges)

    def is_connected(self) -> bool:
        if not self.branching:
            return False
        adj = defaultdict(set)
        for e in self.edges:
            a, b = e.ends
            adj[a].add(b)
            adj[b].add(a)
        seen = {self.branching[0]}
        stack = [self.branching[0]]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.branching)


def build_diagram(g: EmbeddedGraph, partition: VoronoiPartition) -> VoronoiDiagram:
    if len(partition.sites) < 3:
        raise DegenerateSites(f"{len(partition.sites)} sites; need at least 3")
    if not g.is_triangulated():
        raise DiagramError("the diagram needs a triangulated graph")
    fod = g.face_of_dart()
    faces = g.faces()
    tree = partition.tree_edges()
    alive = [e not in tree for e in range(g.m)]
    incident: list[set[int]] = [set() for _ in faces]
    for e in range(g.m):
        if alive[e]:
            a, b = fod[2 * e], fod[2 * e + 1]
            if a == b:
                raise DiagramError("dual loop: the primal graph has a bridge")
            incident[a].add(e)
            incident[b].add(e)
    queue = deque(f.id for f in faces if len(incident[f.id]) == 1)
    while queue:
        f = queue.popleft()
        if len(incident[f]) != 1:
            continue
        (e,) = incident[f]
        alive[e] = False
        incident[f].clear()
        other = fod[2 * e] if fod[2 * e] != f else fod[2 * e + 1]
        incident[other].discard(e)
        if len(incident[other]) == 1:
            queue.append(other)

    branching = tuple(f.id for f in faces if len(incident[f.id]) == 3)
    if not branching:
        raise DiagramError("no branching nodes survived pruning")
    used = [False] * g.m
    edges: list[DiagramEdge] = []
    for f in branching:
        for d0 in faces[f].darts:
            x = d0 >> 1
            if not alive[x] or used[x]:
                continue
            path_faces, path_darts = [f], []
            dart = d0
            while True:
                used[dart >> 1] = True
                path_darts.append(dart)
                nxt = fod[dart ^ 1]
                path_faces.append(nxt)
                if len(incident[nxt]) == 3:
                    break
                (y,) = incident[nxt] - {dart >> 1}
                dart = 2 * y if fod[2 * y] == nxt else 2 * y + 1
            edges.append(DiagramEdge(len(edges), tuple(path_faces), tuple(path_darts)))

    owner = partition.owner
    sides = []
    for de in edges:
        tails = {owner[dart_tail(g, d)] for d in de.darts}
        heads = {owner[dart_head(g, d)] for d in de.darts}
        if len(tails) != 1 or len(heads) != 1:
            raise DiagramError(f"diagram edge {de.id} does not separate two cells")
        sides.append((tails.pop(), heads.pop()))
    return VoronoiDiagram(partition, branching, tuple(edges), tuple(sides))


def diagram_faces(g: EmbeddedGraph, diagram: VoronoiDiagram) -> list[set[int]]:
    """Faces of the diagram, each given as the set of sites seen inside it.

    Edge sides are glued around every branching node through the triangle
    corner they share; each resulting class is one face of the diagram.
    """
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    end_at: dict[tuple[int, int], tuple[int, int]] = {}
    for de in diagram.edges:
        end_at[(de.faces[0], de.darts[0] >> 1)] = (de.id, de.darts[0])
        end_at[(de.faces[-1], de.darts[-1] >> 1)] = (de.id, de.darts[-1])

    def side_of(key, vertex):
        eid, dart = end_at[key]
        if vertex == dart_tail(g, dart):
            return (eid, 0)
        if vertex == dart_head(g, dart):
            return (eid, 1)
        raise DiagramError("corner vertex is not on the crossed edge")

    sites_of: dict[tuple[int, int], int] = {}
    for f in diagram.branching:
        darts = g.faces()[f].darts
        for i in range(3):
            d, d_next = darts[i], darts[(i + 1) % 3]
            y = dart_head(g, d)
            a = side_of((f, d >> 1), y)
            b = side_of((f, d_next >> 1), y)
            union(a, b)
            sites_of[a] = sites_of[b] = diagram.partition.owner[y]
    for de in diagram.edges:
        for s in (0, 1):
            find((de.id, s))
            sites_of.setdefault((de.id, s), diagram.sides[de.id][s])
    classes: dict = defaultdict(set)
    for key in list(parent):
        classes[find(key)].add(sites_of[key])
    return list(classes.values())


@dataclass(frozen=True)
class Incidence:
    site: int
    vertex: int
    face: int


@dataclass(frozen=True)
class Diamond:
    """Diamond of one diagram edge.

    ``incidences`` is ordered ``(0,0), (0,1), (1,0), (1,1)`` by (side, end):
    side 0 is the side whose site id is smaller, end 0 the end whose
    branching face id is smaller.
    """

    id: int
    edge: DiagramEdge
    incidences: tuple[Incidence, Incidence, Incidence, Incidence]
    spokes: tuple[tuple[int, ...], ...]
    crossing_edges: tuple[int, int]
    perimeter: tuple[int, ...]
    perimeter_vertices: frozenset[int]
    spoke_edges: frozenset[int]
    interior_faces: frozenset[int]
    vertices: frozenset[int]
    edges: frozenset[int]

    @property
    def interior_vertices(self) -> frozenset[int]:
        return self.vertices - self.perimeter_vertices

    def incidence(self, i: int, j: int) -> Incidence:
        return self.incidences[2 * i + j]


def _make_diamond(g: EmbeddedGraph, diagram: VoronoiDiagram, de: DiagramEdge) -> Diamond:
    part = diagram.partition
    owner = part.owner
    d_first, d_last = de.darts[0], de.darts[-1]
    f1, f2 = de.ends
    # raw[(side, end)] = vertex
    raw = {
        (0, 0): dart_tail(g, d_first),
        (1, 0): dart_head(g, d_first),
        (0, 1): dart_tail(g, d_last),
        (1, 1): dart_head(g, d_last),
    }
    site = {s: owner[raw[(s, 0)]] for s in (0, 1)}
    side_order = (0, 1) if site[0] <= site[1] else (1, 0)
    end_order = (1, 0) if f2 < f1 else (0, 1)
    face_of_end = {0: f1, 1: f2}
    incs, spokes = [], []
    for s in side_order:
        for t in end_order:
            u = raw[(s, t)]
            incs.append(Incidence(owner[u], u, face_of_end[t]))
            spokes.append(part.spoke(u))

    spoke_edges = set()
    for inc in incs:
        spoke_edges.update(part.spoke_edges(inc.vertex))

    # perimeter: p0 -> u(0,0) -> u(1,0) -> p1 -> u(1,1) -> u(0,1) -> p0
    s00, s01, s10, s11 = spokes
    walk = list(s00) + list(reversed(s10)) + list(s11)[1:] + list(reversed(s01))[:-1]
    perimeter = tuple(walk)
    perim_vertices = frozenset(walk)

    barrier = {f1, f2}
    start = [f for f in de.faces[1:-1]]
    interior = set(start)
    queue = deque(start)
    faces = g.faces()
    fod = g.face_of_dart()
    while queue:
        f = queue.popleft()
        for d in faces[f].darts:
            e = d >> 1
            if e in spoke_edges:
                continue
            h = fod[d ^ 1]
            if h in barrier or h in interior:
                continue
            interior.add(h)
            queue.append(h)

    vertices = set(perim_vertices)
    edges = set(spoke_edges) | {d_first >> 1, d_last >> 1}
    for f in interior:
        for d in faces[f].darts:
            vertices.add(dart_tail(g, d))
            edges.add(d >> 1)
    return Diamond(
        id=de.id,
        edge=de,
        incidences=tuple(incs),
        spokes=tuple(spokes),
        crossing_edges=(d_first >> 1, d_last >> 1),
        perimeter=perimeter,
        perimeter_vertices=perim_vertices,
        spoke_edges=frozenset(spoke_edges),
        interior_faces=frozenset(interior),
        vertices=frozenset(vertices),
        edges=frozenset(edges),
    )


def enumerate_diamonds(g: EmbeddedGraph, diagram: VoronoiDiagram) -> list[Diamond]:
    return [_make_diamond(g, diagram, de) for de in diagram.edges]


@dataclass
class SeparationReport:
    checked: int = 0
    violations: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_perimeter_separation(
    g: EmbeddedGraph,
    diamond: Diamond,
    sites: Sequence[int],
    samples: Iterable[int] | None = None,
    trees: dict[int, ShortestPathTree] | None = None,
) -> SeparationReport:
    """Check that shortest paths from diamond vertices to sites hit the perimeter."""
    trees = trees if trees is not None else {}
    report = SeparationReport()
    vertices = sorted(diamond.vertices if samples is None else samples)
    for p in sites:
        if p not in trees:
            trees[p] = shortest_path_tree(g, p)
        tree = trees[p]
        for u in vertices:
            report.checked += 1
            if u in diamond.perimeter_vertices:
                continue
            if not diamond.perimeter_vertices.intersection(tree.path(u)):
                report.violations.append((u, p))
    return report
