import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_kmedian import embed, metric
from planar_kmedian.generate import grid_graph
from planar_kmedian.instance import Instance
from planar_kmedian.search import brute_force_opt

from conftest import bellman_ford, floyd_warshall, heap_dijkstra


def path_abc():
    return embed.build(3, [(0, 1, 1), (1, 2, 2)], coords=[(0, 0), (1, 0), (2, 0)])


def test_path_distances_and_parent():
    t = metric.shortest_path_tree(path_abc(), 0)
    assert t.dist == (0.0, 1.0, 3.0)
    assert t.parent[2] == 1 and t.path(2) == (0, 1, 2)


def test_four_cycle_tie_is_lexicographic():
    g = embed.build(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
                    coords=[(0, 0), (1, 0), (1, 1), (0, 1)])
    t = metric.shortest_path_tree(g, 0)
    assert t.dist[2] == 2.0
    assert t.path(2) == (0, 1, 2)


def test_tie_break_stable_under_edge_permutation():
    coords = [(0, 0), (1, 0), (1, 1), (0, 1)]
    base = [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]
    trees = set()
    for perm in itertools.permutations(base):
        t = metric.shortest_path_tree(embed.build(4, list(perm), coords=coords), 0)
        trees.add(tuple(t.path(v) for v in range(4)))
    assert len(trees) == 1


def test_grid_all_pairs_matches_floyd_warshall():
    rng = np.random.default_rng(3)
    g = grid_graph(3, 3, lengths=rng.integers(1, 10, size=12).tolist())
    ap = metric.all_pairs(g)
    assert np.allclose(ap, floyd_warshall(g))
    assert np.array_equal(ap, ap.T)
    for a, b, c in itertools.product(range(9), repeat=3):
        assert ap[a, c] <= ap[a, b] + ap[b, c] + 1e-12


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(2, 5), cols=st.integers(2, 5), seed=st.integers(0, 10**6))
def test_tie_dijkstra_matches_references(rows, cols, seed):
    rng = np.random.default_rng(seed)
    m = rows * (cols - 1) + cols * (rows - 1)
    g = grid_graph(rows, cols, lengths=rng.integers(1, 5, size=m).tolist())
    src = int(rng.integers(0, g.n))
    t = metric.shortest_path_tree(g, src)
    assert list(t.dist) == pytest.approx(bellman_ford(g, src))
    assert list(t.dist) == pytest.approx(heap_dijkstra(g, src))
    # each recorded path is a real path of the recorded length
    for v in range(g.n):
        p = t.path(v)
        length = sum(g.edges[g.edge_between(a, b)].length for a, b in zip(p, p[1:]))
        assert length == pytest.approx(t.dist[v])


def test_multi_source_roots_prefer_smaller_site():
    t = metric.tie_dijkstra(path_abc().with_lengths([1, 1]), [0, 2])
    assert t.root == (0, 0, 2)


def test_infinite_edges_not_relaxed():
    g = metric.clip_long_edges(
        embed.build(3, [(0, 1, 1), (1, 2, 5)], coords=[(0, 0), (1, 0), (2, 0)]), 3)
    t = metric.shortest_path_tree(g, 0)
    assert math.isinf(t.dist[2]) and not t.reachable(2)
    assert math.isinf(metric.distance_rows(g, [0])[0, 2])


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 1.0])
def test_level_below_one_is_zero(eps):
    assert metric.level(0.5, eps) == 0
    assert metric.level(0.0, eps) == 0


def test_level_examples():
    assert metric.level(1, 0.5) == 1
    assert metric.level(1.5 ** 3, 0.5) == 4
    assert metric.level(1.5 ** 3 - 1e-9, 0.5) == 3


def test_level_errors():
    with pytest.raises(ValueError):
        metric.level(math.inf, 0.5)
    with pytest.raises(ValueError):
        metric.level(-1, 0.5)
    with pytest.raises(ValueError):
        metric.level(1, 0)


@settings(max_examples=200, deadline=None)
@given(c=st.floats(0, 1e6), eps=st.floats(0.01, 1.0))
def test_level_definition(c, eps):
    scale = metric.LevelScale(eps)
    l = scale.level(c)
    assert c < scale.power(l)
    assert l == 0 or not c < scale.power(l - 1)


def test_scale_lengths():
    g = grid_graph(3, 3, lengths=list(range(1, 13)))
    assert metric.scale_lengths(g, 1) is g
    assert np.allclose(floyd_warshall(metric.scale_lengths(g, 2)), 2 * floyd_warshall(g))
    with pytest.raises(ValueError):
        metric.scale_lengths(g, 0)


def test_scaling_keeps_optimum():
    rng = np.random.default_rng(5)
    g = grid_graph(2, 5, lengths=rng.integers(1, 9, size=13).tolist())
    inst = Instance(g, (0, 3, 6, 9), (1, 2, 5, 7, 8), 2)
    scaled = Instance(metric.scale_lengths(g, 3.5), inst.clients, inst.facilities, 2)
    a, b = brute_force_opt(inst), brute_force_opt(scaled)
    assert a.open == b.open
    assert b.cost == pytest.approx(3.5 * a.cost)


def test_clip_long_edges():
    g = grid_graph(3, 3, lengths=list(range(1, 13)))
    assert metric.clip_long_edges(g, 12) is g
    assert all(e.infinite for e in metric.clip_long_edges(g, 0).edges)
    clipped = metric.clip_long_edges(
        embed.build(3, [(0, 1, 1), (1, 2, 5)], coords=[(0, 0), (1, 0), (2, 0)]), 3)
    assert math.isinf(floyd_warshall(clipped)[0, 2])
