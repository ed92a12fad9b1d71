"""Shared fixtures and independent reference implementations."""

from __future__ import annotations

import heapq
import itertools
import math

import numpy as np
import pytest

from planar_kmedian import embed
from planar_kmedian.generate import GeneratorSpec, generate


def floyd_warshall(g) -> np.ndarray:
    """All-pairs distances by Floyd-Warshall over finite edges."""
    d = np.full((g.n, g.n), math.inf)
    np.fill_diagonal(d, 0.0)
    for e in g.edges:
        if not e.infinite:
            d[e.u, e.v] = min(d[e.u, e.v], e.length)
            d[e.v, e.u] = min(d[e.v, e.u], e.length)
    for m in range(g.n):
        d = np.minimum(d, d[:, [m]] + d[[m], :])
    return d


def bellman_ford(g, source) -> list[float]:
    dist = [math.inf] * g.n
    dist[source] = 0.0
    for _ in range(g.n):
        changed = False
        for e in g.edges:
            if e.infinite:
                continue
            for a, b in ((e.u, e.v), (e.v, e.u)):
                if dist[a] + e.length < dist[b]:
                    dist[b] = dist[a] + e.length
                    changed = True
        if not changed:
            break
    return dist


def heap_dijkstra(g, source) -> list[float]:
    dist = [math.inf] * g.n
    dist[source] = 0.0
    heap = [(0.0, source)]
    adj = [[] for _ in range(g.n)]
    for e in g.edges:
        if not e.infinite:
            adj[e.u].append((e.v, e.length))
            adj[e.v].append((e.u, e.length))
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for y, w in adj[x]:
            if d + w < dist[y]:
                dist[y] = d + w
                heapq.heappush(heap, (d + w, y))
    return dist


def reference_opt(instance, k=None, weights=None, facilities=None):
    """Plain enumeration of every ``D`` with ``1 <= |D| <= k``: (cost, D).

    Ties go to the smallest ``|D|``, then the lexicographically smallest ``D``.
    """
    k = instance.k if k is None else k
    F = sorted(facilities if facilities is not None else instance.facilities)
    fw = floyd_warshall(instance.graph)
    w = weights if weights is not None else (instance.weights or {c: 1.0 for c in instance.clients})
    found = []
    for s in range(1, min(k, len(F)) + 1):
        for D in itertools.combinations(F, s):
            found.append((sum(wc * min(fw[f, c] for f in D) for c, wc in w.items() if wc > 0), D))
    best = min(cost for cost, _ in found)
    tol = 1e-9 * max(1.0, best)
    return best, min((D for cost, D in found if cost <= best + tol), key=lambda D: (len(D), D))


def reference_ufl(instance, open_cost):
    fw = floyd_warshall(instance.graph)
    best = math.inf
    F = instance.facilities
    for s in range(1, len(F) + 1):
        for D in itertools.combinations(F, s):
            conn = sum(min(fw[f, c] for f in D) for c in instance.clients)
            best = min(best, conn + s * open_cost)
    return best


def square_cycle():
    return embed.build(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
                       coords=[(0, 0), (1, 0), (1, 1), (0, 1)])


def k4():
    coords = [(0, 0), (4, 0), (2, 3), (2, 1)]
    edges = [(0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 1), (1, 3, 1), (2, 3, 1)]
    return embed.build(4, edges, coords=coords)


def small_instance(seed=0, rows=5, cols=5, clients=8, facilities=8, k=2,
                   kind="grid-random-weights", **kw):
    return generate(GeneratorSpec(kind=kind, rows=rows, cols=cols, clients=clients,
                                  facilities=facilities, k=k, seed=seed, **kw))


@pytest.fixture
def grid_instance():
    return small_instance()
