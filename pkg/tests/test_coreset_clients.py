import itertools

import numpy as np
import pytest

from planar_kmedian.coreset_clients import (
    CoresetParams,
    WeightFn,
    approx_solution,
    build_client_coreset,
    verify_coreset,
)
from planar_kmedian.instance import Instance, conn_cost
from planar_kmedian.search import BudgetExceeded

from conftest import floyd_warshall, reference_opt, small_instance


def sampling_instance(seed=0):
    # 400 clients against a support bound near 192: sampling always happens
    return small_instance(seed=seed, rows=20, cols=20, clients=400, facilities=8, k=2)


def manual_check(inst, weights, eps):
    fw = floyd_warshall(inst.graph)
    for s in (1, 2):
        for D in itertools.combinations(inst.facilities, s):
            d = {c: min(fw[f, c] for f in D) for c in inst.clients}
            full = sum(d.values())
            approx = sum(w * d[c] for c, w in weights.items())
            if abs(full - approx) > eps * full + 1e-9 * max(1.0, full):
                return False
    return True


def test_params_validation():
    with pytest.raises(ValueError):
        CoresetParams(eps=0)
    with pytest.raises(ValueError):
        CoresetParams(c0=0.5)
    with pytest.raises(ValueError):
        CoresetParams(strategy="magic")
    with pytest.raises(ValueError):
        CoresetParams(oversample=0)


def test_support_bound_formula():
    p = CoresetParams(eps=0.5, c0=2.0)
    assert p.support_bound(100, 3) == int(np.ceil(2 * 3 * np.log(100) / 0.25))
    assert CoresetParams(eps=0.5, c0=2.0, strategy="chen").support_bound(100, 3) == \
        int(np.ceil(2 * 9 * np.log(100) / 0.25))


def test_passthrough_is_unit():
    inst = small_instance()
    omega = build_client_coreset(inst, CoresetParams(strategy="passthrough"))
    assert omega.weights == {c: 1.0 for c in inst.clients}
    assert omega.support == inst.clients


def test_small_client_set_not_sampled():
    inst = small_instance()
    omega = build_client_coreset(inst, CoresetParams())
    assert omega.weights == {c: 1.0 for c in inst.clients}


def test_approx_colocated_clients_zero_cost():
    inst = small_instance(clients=3, facilities=6, k=3)
    inst = Instance(inst.graph, inst.clients, tuple(set(inst.clients) | {0, 1, 2}), 3)
    assert approx_solution(inst).cost == 0


def test_approx_k_equals_f():
    inst = small_instance(k=8)
    assert approx_solution(inst).open == inst.facilities


@pytest.mark.parametrize("seed", range(4))
def test_approx_within_five_of_optimum(seed):
    inst = small_instance(seed=seed, rows=4, cols=5, clients=10, facilities=10, k=2)
    sol = approx_solution(inst, budget=0)  # forces the local-search path
    assert sol.stats["exact"] is False
    assert sol.cost <= 5 * reference_opt(inst)[0] + 1e-9


def test_sampled_coreset_properties():
    inst = sampling_instance()
    params = CoresetParams(eps=0.25, c0=1.0)
    omega = build_client_coreset(inst, params, seed=3)
    assert len(omega.support) <= params.support_bound(inst.graph.n, inst.k)
    assert len(omega.support) < len(inst.clients)
    # unbiased estimator of |C|; loose band around the mean
    assert 0.7 * len(inst.clients) <= omega.total() <= 1.3 * len(inst.clients)
    assert build_client_coreset(inst, params, seed=3) == omega


def test_chen_strategy_runs_and_is_reproducible():
    inst = sampling_instance()
    params = CoresetParams(eps=0.5, c0=1.0, strategy="chen")
    a = build_client_coreset(inst, params, seed=1)
    assert a == build_client_coreset(inst, params, seed=1)
    assert len(a.support) < len(inst.clients)


def test_verify_unit_and_zero_weights():
    inst = small_instance()
    assert verify_coreset(inst, WeightFn.unit(inst.clients), 0.01)
    assert not verify_coreset(inst, WeightFn({c: 0.0 for c in inst.clients}), 0.5)


def test_verify_matches_manual_evaluation():
    inst = sampling_instance(seed=2)
    for seed in range(6):
        omega = build_client_coreset(inst, CoresetParams(eps=0.25, c0=1.0), seed=seed)
        assert verify_coreset(inst, omega, 0.25) == manual_check(inst, omega.weights, 0.25)
        assert verify_coreset(inst, omega, 0.02) == manual_check(inst, omega.weights, 0.02)


def test_verify_budget():
    inst = small_instance(facilities=20, k=3)
    with pytest.raises(BudgetExceeded):
        verify_coreset(inst, WeightFn.unit(inst.clients), 0.1, budget=10)


def test_weighted_cost_uses_weights():
    inst = small_instance()
    omega = WeightFn({c: 2.0 for c in inst.clients})
    D = inst.facilities[:2]
    assert conn_cost(inst, D, omega.weights) == pytest.approx(2 * conn_cost(inst, D))


def test_combine():
    a, b = WeightFn({1: 1.0, 2: 2.0}), WeightFn({2: 1.0, 3: 4.0})
    assert a.combine(2, b, 0.5).weights == {1: 2.0, 2: 4.5, 3: 2.0}
