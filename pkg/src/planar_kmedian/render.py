"""Deterministic SVG drawings of Voronoi cells, diamonds and solutions."""

from __future__ import annotations

import colorsys
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .embed import EmbeddedGraph, triangulate
from .instance import Instance
from .voronoi import Diamond, VoronoiPartition, build_diagram, enumerate_diamonds, voronoi_partition


class RenderError(ValueError):
    pass


def _color(i: int) -> str:
    # golden-ratio hue walk, fixed saturation and value
    h = (i * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(h, 0.45, 0.95)
    return "#%02x%02x%02x" % (round(r * 255), round(g * 255), round(b * 255))


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def render_svg(
    g: EmbeddedGraph,
    partition: VoronoiPartition | None = None,
    diamonds: Sequence[Diamond] = (),
    highlight: int | None = None,
    clients: Iterable[int] = (),
    facilities: Iterable[int] = (),
    open_facilities: Iterable[int] = (),
    scale: float = 40.0,
    margin: float = 20.0,
) -> str:
    if g.coords is None:
        raise RenderError("rendering needs vertex coordinates")
    xs = [c[0] for c in g.coords]
    ys = [c[1] for c in g.coords]
    x0, y0 = min(xs), min(ys)
    width = (max(xs) - x0) * scale + 2 * margin
    height = (max(ys) - y0) * scale + 2 * margin

    def pt(v):
        x, y = g.coords[v]
        # flip y so that larger coordinates are drawn higher
        return _fmt((x - x0) * scale + margin), _fmt(height - ((y - y0) * scale + margin))

    owner = partition.owner if partition is not None else None
    site_index = {p: i for i, p in enumerate(partition.sites)} if partition is not None else {}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        '<g class="edges">',
    ]
    for eid, e in enumerate(g.edges):
        if e.infinite:
            continue
        (ax, ay), (bx, by) = pt(e.u), pt(e.v)
        color = "#999999"
        if owner is not None and owner[e.u] == owner[e.v] and owner[e.u] >= 0:
            color = _color(site_index[owner[e.u]])
        out.append(f'<line class="edge" data-edge="{eid}" x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                   f'stroke="{color}" stroke-width="2"/>')
    out.append("</g>")

    if diamonds:
        out.append('<g class="diamonds">')
        for d in diamonds:
            if highlight is not None and d.id == highlight:
                pts = " ".join(",".join(pt(v)) for v in d.perimeter)
                out.append(f'<polygon class="diamond-highlight" data-diamond="{d.id}" points="{pts}" '
                           'fill="#cccccc" fill-opacity="0.5" stroke="none"/>')
        for d in diamonds:
            for t, spoke in enumerate(d.spokes):
                pts = " ".join(",".join(pt(v)) for v in spoke)
                out.append(f'<polyline class="spoke" data-diamond="{d.id}" data-incidence="{t}" '
                           f'points="{pts}" fill="none" stroke="#333333" stroke-width="1"/>')
        out.append("</g>")

    out.append('<g class="vertices">')
    for v in range(g.n):
        x, y = pt(v)
        fill = "#ffffff"
        if owner is not None and owner[v] >= 0:
            fill = _color(site_index[owner[v]])
        out.append(f'<circle class="vertex" data-vertex="{v}" cx="{x}" cy="{y}" r="4" '
                   f'fill="{fill}" stroke="#000000" stroke-width="0.5"/>')
    out.append("</g>")

    out.append('<g class="marks">')
    for c in sorted(set(clients)):
        x, y = pt(c)
        out.append(f'<circle class="client" data-vertex="{c}" cx="{x}" cy="{y}" r="2" fill="#cc0000"/>')
    opened = set(open_facilities)
    for f in sorted(set(facilities) | opened):
        x, y = pt(f)
        cls = "facility open" if f in opened else "facility"
        fill = "#000000" if f in opened else "none"
        out.append(f'<rect class="{escape(cls)}" data-vertex="{f}" x="{_fmt(float(x) - 5)}" '
                   f'y="{_fmt(float(y) - 5)}" width="10" height="10" fill="{fill}" stroke="#000000"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_instance(instance: Instance, sites: Iterable[int] | None = None,
                    open_facilities: Iterable[int] = (), highlight: int | None = None,
                    diamonds: bool = True) -> str:
    """Cells of ``sites`` (the clients by default) on the triangulated graph."""
    g = instance.graph
    if g.coords is None:
        raise RenderError("rendering needs vertex coordinates")
    sites = sorted(set(sites if sites is not None else instance.clients))
    tri = triangulate(g) if len(g.components(finite_only=True)) == 1 else g
    part = voronoi_partition(tri, sites) if tri.n == g.n else None
    ds: list[Diamond] = []
    if diamonds and part is not None and len(sites) >= 3 and tri.is_triangulated():
        ds = enumerate_diamonds(tri, build_diagram(tri, part))
    return render_svg(tri, part, ds, highlight, instance.clients, instance.facilities,
                      open_facilities)
