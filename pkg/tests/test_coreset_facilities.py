import math

import numpy as np
import pytest

from planar_kmedian import embed
from planar_kmedian.coreset_clients import WeightFn
from planar_kmedian.coreset_facilities import (
    EPS_CAP,
    bound_holds,
    build_facility_coreset,
    compute_profile,
    normalize,
    place_portals,
    profile_bound_log,
    substitution_violations,
    window_radius,
)
from planar_kmedian.instance import Instance, conn_cost
from planar_kmedian.metric import LevelScale
from planar_kmedian.voronoi import build_diagram, enumerate_diamonds, voronoi_partition

from conftest import floyd_warshall, reference_opt, small_instance


def ref_level(c, eps):
    l = 0
    while not c < (1 + eps) ** l:
        l += 1
    return l


def wedge(ax_length):
    """Sites a=0, b=1, c=2 on a big triangle; x=3 hangs off a."""
    edges = [(0, 1, 10), (1, 2, 10), (2, 0, 10), (0, 3, ax_length), (1, 3, 2), (2, 3, 2)]
    return embed.build(4, edges, coords=[(0, 0), (10, 0), (5, 8), (5, 3)])


def wedge_system(ax_length, eps=0.25):
    g = wedge(ax_length)
    part = voronoi_partition(g, [0, 1, 2])
    diagram = build_diagram(g, part)
    diamonds = enumerate_diamonds(g, diagram)
    return g, diamonds, place_portals(g, diagram, LevelScale(eps), diamonds)


def spoke_to_x(system):
    (inc,) = [i for i in system.portals if i.vertex == 3]
    return system.portals[inc]


def star(leaf_length=2.0, leaves=5):
    coords = [(0, 0)] + [(math.cos(t), math.sin(t))
                         for t in np.linspace(0, 2 * math.pi, leaves, endpoint=False)]
    edges = [(0, i, leaf_length) for i in range(1, leaves + 1)]
    g = embed.build(leaves + 1, edges, coords=coords)
    return Instance(g, tuple(range(1, leaves + 1)), (0,), 1)


def test_normalize_factor_one_when_on_target():
    norm = normalize(star(), eps=0.5)
    assert norm.factor == pytest.approx(1.0)
    assert norm.threshold == pytest.approx(10.0)


def test_normalize_hits_target():
    inst = small_instance(seed=4, rows=6, cols=6, clients=9, facilities=10, k=2)
    for eps in (0.1, 0.2):
        norm = normalize(inst, eps=eps)
        target = len(norm.sites) / eps
        cost = conn_cost(norm.instance, norm.approx.open, norm.instance.weights)
        assert cost == pytest.approx(target, rel=1e-12)
        assert norm.threshold >= target
        assert all(e.infinite or e.length <= norm.threshold
                   for e in norm.instance.graph.edges)
        assert norm.scale.L == 1 + ref_level(norm.instance.graph.finite_edge_count()
                                             * norm.threshold, eps)


def test_normalize_degenerate_zero_cost():
    inst = small_instance(clients=3, facilities=3, k=3)
    inst = Instance(inst.graph, inst.clients, inst.clients, 3)
    assert normalize(inst).degenerate


def test_short_spoke_has_only_site_portal():
    _, _, system = wedge_system(0.9)
    ps = spoke_to_x(system)
    assert len(ps) == 1 and ps[0].vertex == 0 and ps[0].offset == 0


def test_portals_on_spoke_of_length_one_plus_eps_squared():
    g, _, system = wedge_system(1.25 ** 2)
    ps = spoke_to_x(system)
    assert [p.offset for p in ps] == pytest.approx([0, 1, 1.25, 1.5625])
    assert ps[0].vertex == 0 and ps[-1].vertex == 3
    # the two middle portals are fresh subdivision vertices
    assert system.graph.n == g.n + 2
    fw = floyd_warshall(system.graph)
    assert [fw[0, p.vertex] for p in ps] == pytest.approx([0, 1, 1.25, 1.5625])
    assert np.array_equal(fw[:4, :4], floyd_warshall(g))


def test_site_profile_on_own_spoke():
    _, diamonds, system = wedge_system(1.25 ** 2)
    (d,) = [d for d in diamonds if any(i.vertex == 3 for i in d.incidences)][:1]
    prof = compute_profile(system, 0, d, 0.25)
    t = next(t for t, i in enumerate(d.incidences) if i.vertex == 3)
    lam, levels = prof.entries[t]
    # offset 1 > eps * 1 is the first strict hit
    assert lam == 1
    assert levels == ((0, 0), (1, 1), (2, 2), (3, 3))


def test_profile_against_independent_computation():
    eps = 0.25
    _, diamonds, system = wedge_system(1.25 ** 2)
    fw = floyd_warshall(system.graph)
    radius = window_radius(eps)
    for d in diamonds:
        for w in sorted(d.vertices):
            prof = compute_profile(system, w, d, eps)
            for t, inc in enumerate(d.incidences):
                ps = system.portals[inc]
                ell = len(ps) - 1
                lam = next((p.index for p in ps if p.offset > eps * fw[w, p.vertex]), ell)
                window = sorted({0} | set(range(max(0, lam - radius), min(ell, lam + radius) + 1)))
                expected = (lam, tuple((i, ref_level(fw[w, ps[i].vertex], eps)) for i in window))
                assert prof.entries[t] == expected


def test_profile_deterministic_and_rejects_outsiders():
    _, diamonds, system = wedge_system(1.5)
    d = diamonds[0]
    w = min(d.vertices)
    assert compute_profile(system, w, d, 0.25) == compute_profile(system, w, d, 0.25)
    outsider = next((v for v in range(4) if v not in d.vertices), None)
    if outsider is not None:
        with pytest.raises(ValueError):
            compute_profile(system, outsider, d, 0.25)
    with pytest.raises(ValueError):
        compute_profile(system, 99, d, 0.25)


def test_window_radius():
    assert window_radius(0.5) == 8
    assert window_radius(0.25) == 64
    assert window_radius(0.24) == math.ceil(0.24 ** -3)


def test_single_facility():
    inst = small_instance(facilities=1, clients=10, k=1)
    assert build_facility_coreset(inst).facilities == inst.facilities


def test_two_sites_keeps_everything():
    inst = small_instance(clients=2, facilities=10, k=1)
    fc = build_facility_coreset(inst, eps=0.25)
    assert fc.facilities == inst.facilities


def test_zero_cost_returns_approx():
    inst = small_instance(clients=3, facilities=6)
    inst = Instance(inst.graph, inst.clients, tuple(set(inst.clients) | {0}), 3)
    fc = build_facility_coreset(inst)
    assert fc.stats["degenerate"] and set(fc.facilities) <= set(inst.facilities)
    assert conn_cost(inst, fc.facilities) == 0


@pytest.mark.parametrize("seed", range(3))
def test_witness_and_substitution(seed):
    inst = small_instance(seed=seed, rows=7, cols=7, clients=8, facilities=18, k=2)
    fc = build_facility_coreset(inst, eps=0.25)
    assert set(fc.witness) == set(inst.facilities)
    assert set(fc.witness.values()) == set(fc.facilities)
    assert set(fc.facilities) <= set(inst.facilities)
    for data in fc.components:
        for (did, f), prof in data.profiles.items():
            rep = fc.witness[f]
            assert data.profiles[(did, rep)] == prof
    assert substitution_violations(fc) == []
    assert bound_holds(fc)


def test_portal_counts_bounded_by_L():
    inst = small_instance(seed=7, rows=8, cols=8, clients=10, facilities=15, k=2)
    fc = build_facility_coreset(inst, eps=0.2)
    L = fc.stats["L"]
    for data in fc.components:
        if data.system is not None:
            assert all(len(ps) <= L for ps in data.system.portals.values())


def test_coreset_quality_on_sixty_vertices():
    inst = small_instance(seed=11, rows=6, cols=10, clients=10, facilities=14, k=2)
    fc = build_facility_coreset(inst, WeightFn.unit(inst.clients), eps=0.25)
    full = reference_opt(inst)[0]
    sub = reference_opt(inst, facilities=fc.facilities)[0]
    assert full <= sub <= (1 + 8 * 0.25) * full + 1e-9


def test_eps_is_capped():
    fc = build_facility_coreset(small_instance(), eps=0.9)
    assert fc.stats["eps_internal"] == EPS_CAP and fc.stats["eps"] == 0.9


def test_bound_log_formula():
    assert profile_bound_log(5, 3, 0.5) == pytest.approx(math.log(5) + 4 * (16 + 3) * math.log(3))


def test_deterministic():
    inst = small_instance(seed=2, rows=6, cols=6, clients=8, facilities=15)
    a = build_facility_coreset(inst).to_json()
    b = build_facility_coreset(inst).to_json()
    assert a == b


def test_clustered_facilities_compress():
    rows = cols = 8
    rng = np.random.default_rng(0)
    cluster = {r * cols + c for r in range(5, 8) for c in range(5, 8)}
    from planar_kmedian.generate import grid_graph
    base = grid_graph(rows, cols)
    lengths = [0.001 if (e.u in cluster and e.v in cluster) else float(rng.integers(1, 10))
               for e in base.edges]
    g = grid_graph(rows, cols, lengths=lengths)
    inst = Instance(g, (0, 2, 3, 10, 12, 17, 24, 30, 33, 40), tuple(sorted(cluster)) + (5, 20, 27), 2)
    fc = build_facility_coreset(inst, eps=0.25)
    assert len(fc.facilities) <= len(inst.facilities) // 2
    assert reference_opt(inst, facilities=fc.facilities)[0] <= 3 * reference_opt(inst)[0] + 1e-9
