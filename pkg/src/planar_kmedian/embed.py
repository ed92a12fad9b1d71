"""Embedded planar graphs stored as rotation systems.

Vertices are the integers ``0..n-1`` and edges are indexed by position in
``EmbeddedGraph.edges``.  Every edge has two darts: ``2*e`` runs from
``edge.u`` to ``edge.v`` and ``2*e + 1`` runs back.  ``rotation[x]`` lists
the edge ids around ``x`` in counter-clockwise order.

Faces are traced with the rule "arrive at ``x`` through edge ``e``, leave
through the edge preceding ``e`` in ``rotation[x]``", which keeps each face
on the left of its darts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

INFINITE = math.inf


class EmbeddingError(ValueError):
    """Raised when an edge list or rotation system is not a valid plane graph."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: float
    synthetic: bool = False

    @property
    def infinite(self) -> bool:
        return math.isinf(self.length)

    def other(self, x: int) -> int:
        if x == self.u:
            return self.v
        if x == self.v:
            return self.u
        raise KeyError(f"vertex {x} is not an endpoint of edge ({self.u}, {self.v})")


@dataclass(frozen=True)
class Face:
    id: int
    darts: tuple[int, ...]


@dataclass(frozen=True)
class DualGraph:
    """Dual of an embedded graph.

    ``edges[e]`` is the pair of faces on the two sides of primal edge ``e``
    (left of dart ``2e`` first), so dual edge ids coincide with primal ids.
    """

    face_count: int
    edges: tuple[tuple[int, int], ...]

    def primal_of(self, dual_edge: int) -> int:
        return dual_edge

    def dual_of(self, primal_edge: int) -> int:
        return primal_edge

    def degree(self, face: int) -> int:
        return sum((a == face) + (b == face) for a, b in self.edges)


def dart_tail(g: "EmbeddedGraph", d: int) -> int:
    e = g.edges[d >> 1]
    return e.u if d % 2 == 0 else e.v


def dart_head(g: "EmbeddedGraph", d: int) -> int:
    e = g.edges[d >> 1]
    return e.v if d % 2 == 0 else e.u


def dart_from(g: "EmbeddedGraph", e: int, x: int) -> int:
    """Dart of edge ``e`` leaving vertex ``x``."""
    return 2 * e if g.edges[e].u == x else 2 * e + 1


@dataclass(frozen=True)
class EmbeddedGraph:
    n: int
    edges: tuple[Edge, ...]
    rotation: tuple[tuple[int, ...], ...]
    coords: tuple[tuple[float, float], ...] | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    # -- basic queries -------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.edges)

    def finite_edge_count(self) -> int:
        return sum(1 for e in self.edges if not e.infinite)

    def neighbors(self, x: int) -> list[int]:
        return [self.edges[e].other(x) for e in self.rotation[x]]

    def adjacency(self, finite_only: bool = True) -> list[list[tuple[int, int]]]:
        """Per-vertex ``(neighbor, edge id)`` lists, rotation order."""
        key = ("adj", finite_only)
        if key not in self._cache:
            adj = [
                [
                    (self.edges[e].other(x), e)
                    for e in self.rotation[x]
                    if not (finite_only and self.edges[e].infinite)
                ]
                for x in range(self.n)
            ]
            self._cache[key] = adj
        return self._cache[key]

    def edge_between(self, a: int, b: int) -> int | None:
        for e in self.rotation[a]:
            if self.edges[e].other(a) == b:
                return e
        return None

    def faces(self) -> tuple[Face, ...]:
        if "faces" not in self._cache:
            self._cache["faces"] = _trace_faces(self)
        return self._cache["faces"]

    def face_of_dart(self) -> list[int]:
        if "face_of_dart" not in self._cache:
            owner = [-1] * (2 * self.m)
            for f in self.faces():
                for d in f.darts:
                    owner[d] = f.id
            self._cache["face_of_dart"] = owner
        return self._cache["face_of_dart"]

    def face_vertices(self, face: int) -> list[int]:
        return [dart_tail(self, d) for d in self.faces()[face].darts]

    def components(self, finite_only: bool = False) -> list[list[int]]:
        adj = self.adjacency(finite_only)
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y, _ in adj[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def euler_characteristic_ok(self) -> bool:
        # faces are traced per component, so each component is its own sphere
        comps = len(self.components())
        isolated = sum(1 for r in self.rotation if not r)
        return self.n - self.m + len(self.faces()) + isolated == 2 * comps

    def is_triangulated(self) -> bool:
        return all(len(f.darts) == 3 for f in self.faces())

    def total_length(self) -> float:
        return sum(e.length for e in self.edges if not e.infinite)

    # -- derived graphs --------------------------------------------------

    def with_lengths(self, lengths: Sequence[float]) -> "EmbeddedGraph":
        edges = tuple(
            Edge(e.u, e.v, float(l), e.synthetic) for e, l in zip(self.edges, lengths)
        )
        return EmbeddedGraph(self.n, edges, self.rotation, self.coords)

    def induced(self, vertices: Iterable[int], finite_only: bool = True):
        """Sub-embedding induced by ``vertices``.

        Returns ``(graph, old_to_new, new_to_old)``.  Restricting a rotation
        system to a subgraph keeps it planar.
        """
        keep = sorted(set(vertices))
        old_to_new = {v: i for i, v in enumerate(keep)}
        edge_map: dict[int, int] = {}
        edges: list[Edge] = []
        for eid, e in enumerate(self.edges):
            if finite_only and e.infinite:
                continue
            if e.u in old_to_new and e.v in old_to_new:
                edge_map[eid] = len(edges)
                edges.append(Edge(old_to_new[e.u], old_to_new[e.v], e.length, e.synthetic))
        rotation = tuple(
            tuple(edge_map[e] for e in self.rotation[v] if e in edge_map) for v in keep
        )
        coords = tuple(self.coords[v] for v in keep) if self.coords else None
        return EmbeddedGraph(len(keep), tuple(edges), rotation, coords), old_to_new, keep


def _trace_faces(g: EmbeddedGraph) -> tuple[Face, ...]:
    pos = [{e: i for i, e in enumerate(rot)} for rot in g.rotation]
    seen = [False] * (2 * g.m)
    faces = []
    for start in range(2 * g.m):
        if seen[start]:
            continue
        walk = []
        d = start
        while not seen[d]:
            seen[d] = True
            walk.append(d)
            x = dart_head(g, d)
            rot = g.rotation[x]
            nxt = rot[(pos[x][d >> 1] - 1) % len(rot)]
            d = dart_from(g, nxt, x)
        if d != start:
            raise EmbeddingError("rotation system does not close face walks")
        faces.append(Face(len(faces), tuple(walk)))
    return tuple(faces)


def _parse_length(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinite", "+inf"):
            return INFINITE
        value = float(value)
    length = float(value)
    if not math.isinf(length) and length <= 0:
        raise EmbeddingError(f"finite edge lengths must be positive, got {length}")
    return length


def build(
    vertex_count: int,
    edge_list: Sequence[tuple],
    rotation: Mapping[int, Sequence[int]] | None = None,
    coords: Sequence[tuple[float, float]] | None = None,
) -> EmbeddedGraph:
    """Build and validate an embedded graph.

    ``edge_list`` holds ``(u, v, length)`` or ``(u, v, length, synthetic)``
    tuples; the edge id is the list position.  Exactly one of ``rotation``
    (vertex -> counter-clockwise edge ids) or ``coords`` must be supplied.
    """
    if rotation is None and coords is None:
        raise EmbeddingError("need a rotation system or coordinates")
    edges = []
    seen_pairs = set()
    for item in edge_list:
        u, v, length = int(item[0]), int(item[1]), _parse_length(item[2])
        synthetic = bool(item[3]) if len(item) > 3 else False
        if u == v:
            raise EmbeddingError(f"self-loop at vertex {u}")
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise EmbeddingError(f"edge ({u}, {v}) references an unknown vertex")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            raise EmbeddingError(f"duplicate edge {pair}")
        seen_pairs.add(pair)
        edges.append(Edge(u, v, length, synthetic))

    if rotation is None:
        rot = _rotation_from_coords(vertex_count, edges, coords)
    else:
        rot = []
        for x in range(vertex_count):
            order = [int(e) for e in rotation.get(x, rotation.get(str(x), []))]
            rot.append(tuple(order))
    _check_rotation(vertex_count, edges, rot)
    g = EmbeddedGraph(
        vertex_count,
        tuple(edges),
        tuple(rot),
        tuple((float(x), float(y)) for x, y in coords) if coords is not None else None,
    )
    if not g.euler_characteristic_ok():
        raise EmbeddingError("rotation system is not planar (Euler relation fails)")
    return g


def _rotation_from_coords(n, edges, coords):
    if len(coords) != n:
        raise EmbeddingError("one coordinate pair per vertex is required")
    around: list[list[tuple[float, int]]] = [[] for _ in range(n)]
    for eid, e in enumerate(edges):
        for a, b in ((e.u, e.v), (e.v, e.u)):
            ang = math.atan2(coords[b][1] - coords[a][1], coords[b][0] - coords[a][0])
            around[a].append((ang, eid))
    return [tuple(eid for _, eid in sorted(lst)) for lst in around]


def _check_rotation(n, edges, rot):
    count = [0] * len(edges)
    for x in range(n):
        for e in rot[x]:
            if not 0 <= e < len(edges) or x not in (edges[e].u, edges[e].v):
                raise EmbeddingError(f"rotation at {x} lists foreign edge {e}")
            count[e] += 1
    if any(c != 2 for c in count):
        raise EmbeddingError("every edge must appear exactly once at each endpoint")


# -- mutation helpers (operate on private lists, never on a shared graph) ---


class _Builder:
    def __init__(self, g: EmbeddedGraph):
        self.n = g.n
        self.edges = list(g.edges)
        self.rotation = [list(r) for r in g.rotation]
        self.coords = list(g.coords) if g.coords else None
        self.adjacent = [set(g.neighbors(x)) for x in range(g.n)]

    def tail(self, d):
        e = self.edges[d >> 1]
        return e.u if d % 2 == 0 else e.v

    def head(self, d):
        e = self.edges[d >> 1]
        return e.v if d % 2 == 0 else e.u

    def add_vertex(self, xy=None) -> int:
        self.rotation.append([])
        self.adjacent.append(set())
        if self.coords is not None:
            self.coords.append(xy if xy is not None else (0.0, 0.0))
        self.n += 1
        return self.n - 1

    def insert_at_corner(self, x, out_edge, new_edge):
        """Place ``new_edge`` in the face corner at ``x`` that follows ``out_edge``."""
        rot = self.rotation[x]
        i = rot.index(out_edge)
        rot.insert(i + 1, new_edge)

    def add_edge(self, a, b, length, synthetic, corner_a, corner_b):
        eid = len(self.edges)
        self.edges.append(Edge(a, b, length, synthetic))
        if corner_a is None:
            self.rotation[a].append(eid)
        else:
            self.insert_at_corner(a, corner_a, eid)
        if corner_b is None:
            self.rotation[b].append(eid)
        else:
            self.insert_at_corner(b, corner_b, eid)
        self.adjacent[a].add(b)
        self.adjacent[b].add(a)
        return eid

    def freeze(self) -> EmbeddedGraph:
        return EmbeddedGraph(
            self.n,
            tuple(self.edges),
            tuple(tuple(r) for r in self.rotation),
            tuple(self.coords) if self.coords is not None else None,
        )


def triangulate(g: EmbeddedGraph) -> EmbeddedGraph:
    """Add synthetic infinite-length edges until every face is a triangle.

    Chords join two corners that are not yet adjacent, so the result stays
    simple.  When a face offers no such chord a new vertex is planted inside
    it and chorded from there.
    """
    if g.n < 3:
        return g
    if len(g.components()) != 1:
        raise EmbeddingError("triangulate expects a connected graph")
    b = _Builder(g)
    for face in g.faces():
        walk = list(face.darts)
        guard = 0
        while len(walk) > 3:
            guard += 1
            if guard > 10 * (len(face.darts) + 10):
                raise EmbeddingError("triangulation did not converge")
            k = len(walk)
            corners = [b.tail(d) for d in walk]
            for i in range(k):
                a, c = corners[i], corners[(i + 2) % k]
                if a != c and c not in b.adjacent[a]:
                    d_out_a = walk[i]
                    d_out_c = walk[(i + 2) % k]
                    eid = b.add_edge(
                        a, c, INFINITE, True, d_out_a >> 1, d_out_c >> 1
                    )
                    chord = 2 * eid  # a -> c
                    if i + 2 < k:
                        walk = walk[:i] + [chord] + walk[i + 2:]
                    else:
                        # the ear wraps around the end of the list
                        j = (i + 2) % k
                        walk = walk[j:i] + [chord]
                    break
            else:
                # plant a vertex inside the face, hung from the first corner
                w0 = corners[0]
                xy = None
                if b.coords is not None:
                    pts = [b.coords[c] for c in corners]
                    xy = (
                        sum(p[0] for p in pts) / len(pts),
                        sum(p[1] for p in pts) / len(pts),
                    )
                x = b.add_vertex(xy)
                eid = b.add_edge(w0, x, INFINITE, True, walk[0] >> 1, None)
                walk = [2 * eid, 2 * eid + 1] + walk
    out = b.freeze()
    if not out.euler_characteristic_ok() or not out.is_triangulated():
        raise EmbeddingError("internal error: triangulation broke the embedding")
    return out


def subdivide_edge(g: EmbeddedGraph, edge_id: int, offset: float):
    """Split an edge at ``offset`` from its ``u`` endpoint.

    The original id keeps the ``u``-side piece; the ``v``-side piece gets a
    fresh id.  Returns ``(graph, new_vertex)``.
    """
    b = _Builder(g)
    x = _subdivide_in_place(b, edge_id, offset)
    return b.freeze(), x


def _subdivide_in_place(b: _Builder, edge_id: int, offset: float) -> int:
    e = b.edges[edge_id]
    if e.infinite:
        raise ValueError("cannot subdivide an infinite edge")
    if not 0 < offset < e.length:
        raise ValueError(f"offset {offset} outside (0, {e.length})")
    xy = None
    if b.coords is not None:
        t = offset / e.length
        (x0, y0), (x1, y1) = b.coords[e.u], b.coords[e.v]
        xy = (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    x = b.add_vertex(xy)
    new_id = len(b.edges)
    b.edges[edge_id] = Edge(e.u, x, offset, e.synthetic)
    b.edges.append(Edge(x, e.v, e.length - offset, e.synthetic))
    rv = b.rotation[e.v]
    rv[rv.index(edge_id)] = new_id
    b.rotation[x] = [edge_id, new_id]
    b.adjacent[e.u].discard(e.v)
    b.adjacent[e.v].discard(e.u)
    b.adjacent[e.u].add(x)
    b.adjacent[e.v].add(x)
    b.adjacent[x] = {e.u, e.v}
    return x


def dual(g: EmbeddedGraph) -> DualGraph:
    fod = g.face_of_dart()
    return DualGraph(
        len(g.faces()), tuple((fod[2 * e], fod[2 * e + 1]) for e in range(g.m))
    )


# -- JSON ------------------------------------------------------------------


def to_json(g: EmbeddedGraph) -> dict:
    vertices = []
    for v in range(g.n):
        item: dict = {"id": v}
        if g.coords is not None:
            item["x"], item["y"] = g.coords[v]
        vertices.append(item)
    edges = []
    for eid, e in enumerate(g.edges):
        item = {"id": eid, "u": e.u, "v": e.v, "len": "inf" if e.infinite else e.length}
        if e.synthetic:
            item["synthetic"] = True
        edges.append(item)
    return {
        "vertices": vertices,
        "edges": edges,
        "rotation": {str(v): list(g.rotation[v]) for v in range(g.n)},
    }


def from_json(data: Mapping) -> EmbeddedGraph:
    vertices = sorted(data["vertices"], key=lambda item: int(item["id"]))
    if [int(v["id"]) for v in vertices] != list(range(len(vertices))):
        raise EmbeddingError("vertex ids must be 0..n-1")
    edges = sorted(data["edges"], key=lambda item: int(item["id"]))
    if [int(e["id"]) for e in edges] != list(range(len(edges))):
        raise EmbeddingError("edge ids must be 0..m-1")
    edge_list = [
        (e["u"], e["v"], e["len"], e.get("synthetic", False)) for e in edges
    ]
    coords = None
    if vertices and all("x" in v and "y" in v for v in vertices):
        coords = [(float(v["x"]), float(v["y"])) for v in vertices]
    rotation = data.get("rotation")
    if rotation is not None:
        rotation = {int(k): v for k, v in rotation.items()}
    return build(len(vertices), edge_list, rotation=rotation, coords=coords)
