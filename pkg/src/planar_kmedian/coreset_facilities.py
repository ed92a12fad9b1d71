"""Facility coresets: portals on spokes, per-diamond profiles, profile deduplication."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import embed
from .coreset_clients import WeightFn, approx_solution
from .embed import EmbeddedGraph
from .instance import Instance, Solution, conn_cost
from .metric import LevelScale, clip_long_edges, distance_rows, scale_lengths
from .voronoi import (
    Diamond,
    Incidence,
    VoronoiDiagram,
    build_diagram,
    enumerate_diamonds,
    voronoi_partition,
)

EPS_CAP = 0.24
_SNAP = 1e-12


@dataclass(frozen=True)
class Portal:
    incidence: Incidence
    index: int
    vertex: int
    offset: float


@dataclass(frozen=True)
class Profile:
    """``entries[t] = (lambda, ((iota, level), ...))`` for the four incidences."""

    diamond: int
    entries: tuple

    def window(self, t: int) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries[t][1])


@dataclass
class Normalization:
    instance: Instance
    approx: Solution
    scale: LevelScale
    factor: float
    threshold: float
    sites: tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        return self.factor == 0.0


def _as_weights(instance: Instance, omega) -> dict[int, float]:
    if omega is None:
        return {c: 1.0 for c in instance.clients}
    if isinstance(omega, WeightFn):
        omega = omega.weights
    return {c: float(w) for c, w in omega.items() if w > 0}


def normalize(instance: Instance, omega=None, eps: float = 0.2,
              approx: Solution | None = None) -> Normalization:
    """Rescale so that the approximate solution costs ``|S|/eps``, then clip.

    Edges longer than the clip threshold become infinite.  The threshold is
    the larger of the scaled cost and the largest scaled client distance to
    the approximate solution, so no weighted client loses its path to it.
    """
    weights = _as_weights(instance, omega)
    sites = tuple(sorted(weights))
    inst = Instance(instance.graph, sites, instance.facilities, instance.k, weights)
    if approx is None:
        approx = approx_solution(inst, weights)
    cost = conn_cost(inst, approx.open, weights)
    if cost <= 0:
        return Normalization(inst, approx, LevelScale(eps, 1), 0.0, 0.0, sites)
    factor = (len(sites) / eps) / cost
    g = scale_lengths(instance.graph, factor)
    target = len(sites) / eps
    far = float(distance_rows(g, approx.open)[:, list(sites)].min(axis=0).max())
    threshold = max(target, far)
    g = clip_long_edges(g, threshold)
    m = g.finite_edge_count()
    scale = LevelScale(eps)
    scale.L = 1 + scale.level(m * threshold)
    scaled = Instance(g, sites, instance.facilities, instance.k, weights)
    return Normalization(scaled, approx, scale, factor, threshold, sites)


@dataclass
class PortalSystem:
    graph: EmbeddedGraph
    portals: dict[Incidence, tuple[Portal, ...]]
    scale: LevelScale
    _rows: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def spoke_level(self, inc: Incidence) -> int:
        return len(self.portals[inc]) - 1

    def prepare(self, vertices) -> None:
        """Run one shortest-path pass per vertex not yet cached."""
        todo = sorted(set(vertices) - set(self._rows))
        if todo:
            for v, row in zip(todo, distance_rows(self.graph, todo)):
                self._rows[v] = row

    def dist(self, portal: Portal, w: int) -> float:
        if w not in self._rows:
            self.prepare([w])
        return float(self._rows[w][portal.vertex])


def place_portals(g: EmbeddedGraph, diagram: VoronoiDiagram, scale: LevelScale,
                  diamonds: list[Diamond] | None = None) -> PortalSystem:
    """Subdivide spokes so every portal sits on a vertex.

    Subdivision vertices get fresh ids after the existing ones, so distances
    between old vertices are unchanged.
    """
    part = diagram.partition
    if diamonds is None:
        diamonds = enumerate_diamonds(g, diagram)
    incidences = sorted({inc for d in diamonds for inc in d.incidences},
                        key=lambda i: (i.site, i.vertex, i.face))
    dist = part.dist
    cuts: dict[int, set[float]] = defaultdict(set)
    plan: dict[Incidence, list] = {}
    for inc in incidences:
        path = part.spoke(inc.vertex)
        edges = part.spoke_edges(inc.vertex)
        ell = scale.level(dist[inc.vertex])
        slots = [("v", inc.site)]
        i = 0
        for iota in range(1, ell + 1):
            t = scale.portal_offset(iota)
            while i + 1 < len(path) and dist[path[i + 1]] < t:
                i += 1
            a = path[i]
            tol = _SNAP * max(1.0, t)
            if abs(dist[a] - t) <= tol:
                slots.append(("v", a))
                continue
            b = path[i + 1]
            if abs(dist[b] - t) <= tol:
                slots.append(("v", b))
                continue
            e = edges[i]
            x = t - dist[a]
            from_u = x if g.edges[e].u == a else g.edges[e].length - x
            cuts[e].add(from_u)
            slots.append(("e", e, from_u))
        plan[inc] = slots

    b = embed._Builder(g)
    made: dict[tuple[int, float], int] = {}
    for e in sorted(cuts):
        for off in sorted(cuts[e], reverse=True):
            made[(e, off)] = embed._subdivide_in_place(b, e, off)
    g2 = b.freeze()

    portals = {}
    for inc, slots in plan.items():
        out = []
        for iota, s in enumerate(slots):
            v = s[1] if s[0] == "v" else made[(s[1], s[2])]
            out.append(Portal(inc, iota, v, scale.portal_offset(iota)))
        portals[inc] = tuple(out)
    return PortalSystem(g2, portals, scale)


def window_radius(eps: float) -> int:
    return math.ceil(eps ** -3 - 1e-9)


def compute_profile(system: PortalSystem, w: int, diamond: Diamond, eps: float) -> Profile:
    if w not in diamond.vertices:
        raise ValueError(f"vertex {w} is not in diamond {diamond.id}")
    radius = window_radius(eps)
    entries = []
    for inc in diamond.incidences:
        ps = system.portals[inc]
        ell = len(ps) - 1
        lam = ell
        for p in ps:
            if p.offset > eps * system.dist(p, w):
                lam = p.index
                break
        window = sorted({0} | set(range(max(0, lam - radius), min(ell, lam + radius) + 1)))
        levels = tuple((i, system.scale.level(system.dist(ps[i], w))) for i in window)
        entries.append((lam, levels))
    return Profile(diamond.id, tuple(entries))


@dataclass
class ComponentData:
    vertices: tuple[int, ...]  # original ids, sorted
    local: dict[int, int]
    sites: tuple[int, ...]
    diamonds: list[Diamond] = field(default_factory=list)
    system: PortalSystem | None = None
    profiles: dict[tuple[int, int], Profile] = field(default_factory=dict)  # (diamond, facility)
    note: str = ""


@dataclass
class FacilityCoreset:
    facilities: tuple[int, ...]
    witness: dict[int, int]
    stats: dict
    normalization: Normalization | None = None
    components: list[ComponentData] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "F0": list(self.facilities),
            "size": len(self.facilities),
            "witness": {str(w): f for w, f in sorted(self.witness.items())},
            "stats": self.stats,
        }


def profile_bound_log(support: int, L: int, eps: float) -> float:
    """Natural log of ``support * L**(4 * (ceil(2/eps**3) + 3))``."""
    exponent = 4 * (math.ceil(2 * eps ** -3 - 1e-9) + 3)
    return math.log(max(support, 1)) + exponent * math.log(max(L, 1))


def build_facility_coreset(instance: Instance, omega=None, eps: float = 0.2,
                           approx: Solution | None = None) -> FacilityCoreset:
    eps_user = eps
    eps = min(eps, EPS_CAP)
    norm = normalize(instance, omega, eps, approx)
    F = instance.facilities
    S = norm.sites
    stats: dict = {"eps": eps_user, "eps_internal": eps, "sites": len(S),
                   "approx": list(norm.approx.open)}
    if norm.degenerate:
        F0 = tuple(norm.approx.open)
        witness = {}
        stats.update(degenerate=True, size=len(F0), L=1, factor=None)
        return FacilityCoreset(F0, witness, stats, norm)

    g = norm.instance.graph
    scale = norm.scale
    stats.update(degenerate=False, L=scale.L, factor=norm.factor, threshold=norm.threshold)
    fset = set(F)
    site_set = set(S)
    chosen: set[int] = set()
    witness: dict[int, int] = {}
    components: list[ComponentData] = []
    per_diamond: dict[str, int] = {}
    diamonds_total = 0
    for ci, comp in enumerate(g.components(finite_only=True)):
        comp_sites = tuple(v for v in comp if v in site_set)
        comp_facs = [v for v in comp if v in fset]
        if not comp_facs:
            continue
        sub, old_to_new, keep = g.induced(comp, finite_only=True)
        data = ComponentData(tuple(keep), old_to_new, comp_sites)
        components.append(data)
        if not comp_sites:
            data.note = "no sites"
            continue
        if len(comp_sites) <= 2:
            data.note = "degenerate sites"
            chosen.update(comp_facs)
            witness.update({f: f for f in comp_facs})
            continue
        tri = embed.triangulate(sub)
        if tri.n != sub.n:
            # a planted vertex has no finite path to the sites
            data.note = "planted vertex"
            chosen.update(comp_facs)
            witness.update({f: f for f in comp_facs})
            continue
        part = voronoi_partition(tri, [old_to_new[s] for s in comp_sites])
        diagram = build_diagram(tri, part)
        diamonds = enumerate_diamonds(tri, diagram)
        system = place_portals(tri, diagram, scale, diamonds)
        data.diamonds = diamonds
        data.system = system
        diamonds_total += len(diamonds)
        local_facs = {old_to_new[f]: f for f in comp_facs}
        groups: dict[tuple[int, Profile], list[int]] = defaultdict(list)
        home: dict[int, Diamond] = {}
        for d in diamonds:
            for v in sorted(d.vertices):
                if v in local_facs and v not in home:
                    home[v] = d
        system.prepare(home)
        for v, d in sorted(home.items()):
            prof = compute_profile(system, v, d, eps)
            data.profiles[(d.id, local_facs[v])] = prof
            groups[(d.id, prof)].append(local_facs[v])
        counts: dict[int, int] = defaultdict(int)
        for (did, _), members in groups.items():
            rep = min(members)
            chosen.add(rep)
            counts[did] += 1
            for f in members:
                witness[f] = rep
        for v, f in local_facs.items():
            if v not in home:
                chosen.add(f)
                witness[f] = f
        for did, c in sorted(counts.items()):
            per_diamond[f"{ci}:{did}"] = c

    F0 = tuple(sorted(chosen))
    stats.update(
        size=len(F0),
        diamonds=diamonds_total,
        profiles_per_diamond=per_diamond,
        max_profiles=max(per_diamond.values(), default=0),
        components=len(components),
        bound_log=profile_bound_log(len(S), scale.L, eps),
    )
    return FacilityCoreset(F0, witness, stats, norm, components)


def all_profiles(data: ComponentData, facilities, eps: float) -> dict[int, dict[int, Profile]]:
    """Profiles of every facility in every diamond containing it."""
    out: dict[int, dict[int, Profile]] = defaultdict(dict)
    local = [(data.local[f], f) for f in sorted(facilities) if f in data.local]
    data.system.prepare(v for v, _ in local)
    for d in data.diamonds:
        for v, f in local:
            if v in d.vertices:
                out[d.id][f] = compute_profile(data.system, v, d, eps)
    return out


def substitution_violations(fc: FacilityCoreset, facilities=None) -> list[tuple]:
    """Pairs breaking ``dist(w', pi) <= (1+eps) dist(w, pi) + 1`` for equal profiles."""
    eps = fc.stats["eps_internal"]
    facilities = facilities if facilities is not None else fc.normalization.instance.facilities
    bad = []
    for data in fc.components:
        if data.system is None:
            continue
        diamonds = {d.id: d for d in data.diamonds}
        for did, profs in all_profiles(data, facilities, eps).items():
            by_profile: dict[Profile, list[int]] = defaultdict(list)
            for f, p in profs.items():
                by_profile[p].append(f)
            d = diamonds[did]
            for prof, members in by_profile.items():
                if len(members) < 2:
                    continue
                for t, inc in enumerate(d.incidences):
                    for iota in prof.window(t):
                        portal = data.system.portals[inc][iota]
                        ds = {f: data.system.dist(portal, data.local[f]) for f in members}
                        lo = min(ds.values())
                        hi = max(ds.values())
                        if hi > (1 + eps) * lo + 1 + 1e-9 * max(1.0, hi):
                            bad.append((did, tuple(members), t, iota, lo, hi))
    return bad


def bound_holds(fc: FacilityCoreset) -> bool:
    if fc.stats.get("degenerate"):
        return True
    return math.log(max(len(fc.facilities), 1)) <= fc.stats["bound_log"] + 1e-12
