"""Solvers: exact oracle, FPT scheme, bicriteria scheme and the UFL wrapper."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coreset_clients import CoresetParams, WeightFn, build_client_coreset
from .coreset_facilities import FacilityCoreset, build_facility_coreset
from .division import contract_cells, r_division
from .instance import Instance, Solution, conn_cost, make_solution
from .metric import distance_rows
from .search import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    InfeasibleBudget,
    best_subset,
    brute_force_opt,
    knapsack_assemble,
    local_search,
    subset_count,
)

__all__ = [
    "BudgetExceeded",
    "InfeasibleBudget",
    "IsolationError",
    "RegionTable",
    "bicriteria_solve",
    "brute_force_opt",
    "conn_cost",
    "fpt_solve",
    "knapsack_assemble",
    "local_search",
    "ufl_brute_force",
    "ufl_solve",
]

FPT_SHRINK = 3.0
BICRITERIA_SHRINK = 8.0
THREADS_ENV = "PLANAR_KMEDIAN_THREADS"


class IsolationError(AssertionError):
    """A client's closest open facility lies outside its region."""


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def repetitions(delta: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / delta)))


@dataclass
class Coresets:
    omega: WeightFn
    facility: FacilityCoreset
    sampled: bool


def build_coresets(instance: Instance, eps: float, strategy: str = "sensitivity",
                   c0: float = 10.0, seed=0) -> Coresets:
    params = CoresetParams(eps=min(eps, 0.99), c0=c0, strategy=strategy)
    omega = build_client_coreset(instance, params, seed)
    sampled = any(w != 1.0 for w in omega.weights.values()) or len(omega.weights) != len(instance.clients)
    fc = build_facility_coreset(instance, omega, eps)
    return Coresets(omega, fc, sampled)


def _seeds(seed: int, count: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(count)]


def _weighted_table(sub: Instance):
    dm = sub.distance_matrix()
    w = sub.weight_vector()
    mask = w > 0
    return dm[:, mask], w[mask]


def fpt_solve(instance: Instance, eps: float, seed: int = 0, strategy: str = "sensitivity",
              c0: float = 10.0, delta: float = 0.1, budget: int = DEFAULT_BUDGET) -> Solution:
    """Client coreset, facility coreset, then exhaustive search over ``F0``."""
    if instance.k < 1:
        raise ValueError("k must be at least 1")
    eps_int = eps / FPT_SHRINK
    timings: dict[str, float] = {}
    best: tuple | None = None
    seeds = [seed]
    i = 0
    while i < len(seeds):
        t0 = time.perf_counter()
        cs = build_coresets(instance, eps_int, strategy, c0, seeds[i])
        if cs.sampled and len(seeds) == 1:
            # boost the constant success probability by independent repetition
            seeds += _seeds(seed, repetitions(delta) - 1)
        t1 = time.perf_counter()
        F0 = cs.facility.facilities
        count = subset_count(len(F0), instance.k)
        if count > budget:
            raise BudgetExceeded(f"|F0| = {len(F0)} gives {count} candidate sets, over the budget {budget}")
        sub = Instance(instance.graph, instance.clients, F0, instance.k, cs.omega.weights)
        _, rows = best_subset(*_weighted_table(sub), instance.k, budget)
        D = [F0[r] for r in rows]
        true = conn_cost(instance, D)
        t2 = time.perf_counter()
        timings[f"coresets_{i}"] = t1 - t0
        timings[f"search_{i}"] = t2 - t1
        if best is None or true < best[0]:
            best = (true, D, cs)
        i += 1
    true, D, cs = best
    stats = {
        "solver": "fpt",
        "eps": eps,
        "eps_internal": eps_int,
        "F0": len(cs.facility.facilities),
        "support": len(cs.omega.support),
        "repetitions": len(seeds),
        "coreset": cs.facility.stats,
        "timings": timings,
    }
    return make_solution(instance, D, stats)


@dataclass
class RegionTable:
    regions: list[int]
    boundaries: list[tuple[int, ...]]
    costs: list[list[float]] = field(default_factory=list)
    solutions: list[list[tuple[int, ...]]] = field(default_factory=list)

    def check(self) -> None:
        for b, costs, sols in zip(self.boundaries, self.costs, self.solutions):
            for ell in range(len(costs)):
                assert set(b) <= set(sols[ell]), "region solution misses a boundary vertex"
                assert len(set(sols[ell]) - set(b)) <= ell
                if ell:
                    assert costs[ell] <= costs[ell - 1], "region costs must not increase"


def _region_row(instance: Instance, facilities, boundary, clients, weights, k, eps):
    b = tuple(sorted(boundary))
    if not clients:
        return [0.0] * (k + 1), [b] * (k + 1), 0
    sub = Instance(instance.graph, tuple(clients), tuple(facilities), k,
                   {c: weights[c] for c in clients})
    costs: list[float] = []
    sols: list[tuple[int, ...]] = []
    free = len(facilities) - len(b)
    swaps = 0
    for ell in range(k + 1):
        if ell > free and sols:
            costs.append(costs[-1])
            sols.append(sols[-1])
            continue
        if ell == 0 and not b:
            costs.append(math.inf)
            sols.append(())
            continue
        sol = local_search(sub, b, ell + len(b), eps)
        swaps += sol.stats.get("iterations", 0)
        cost, D = sol.cost, sol.open
        if sols and costs[-1] <= cost:
            cost, D = costs[-1], sols[-1]
        costs.append(cost)
        sols.append(tuple(D))
    return costs, sols, swaps


def bicriteria_solve(instance: Instance, eps: float, seed: int = 0, strategy: str = "sensitivity",
                     c0: float = 10.0, coresets: Coresets | None = None,
                     strict: bool = True, threads: int | None = None) -> Solution:
    """Bicriteria scheme opening at most ``(1+eps)k`` facilities.

    The facility coreset is contracted into its Voronoi graph, which is cut
    into an r-division.  Each region is solved for every extra budget
    ``0..k`` with its boundary forced open, and a knapsack picks the budgets.
    """
    k = instance.k
    if k < 1:
        raise ValueError("k must be at least 1")
    eps_int = eps / BICRITERIA_SHRINK
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    cs = coresets if coresets is not None else build_coresets(instance, eps_int, strategy, c0, seed)
    F0 = cs.facility.facilities
    weights = {c: float(w) for c, w in cs.omega.weights.items() if w > 0}
    t1 = time.perf_counter()
    timings["coresets"] = t1 - t0

    H = contract_cells(instance.graph, F0)
    n_h = len(H.vertices)
    r = max(1, math.ceil((len(F0) / (eps_int * k)) ** 2))
    r = min(r, n_h)
    allowed = math.floor(eps * k)
    division = r_division(H, r)
    while division.total_boundary > allowed and r < n_h:
        r = min(2 * r, n_h)
        division = r_division(H, r)
    t2 = time.perf_counter()
    timings["division"] = t2 - t1

    region_of: dict[int, int] = {}
    for R in division.regions:
        for p in R.vertices:
            region_of.setdefault(p, R.id)
    clients_of: dict[int, list[int]] = {R.id: [] for R in division.regions}
    for c in sorted(weights):
        p = H.owner[c]
        clients_of[region_of[p]].append(c)

    def row(R):
        return _region_row(instance, sorted(R.vertices), R.boundary, clients_of[R.id],
                           weights, k, eps_int)

    rows = _map(row, list(division.regions), threads)
    table = RegionTable([R.id for R in division.regions],
                        [tuple(sorted(R.boundary)) for R in division.regions])
    swaps = 0
    for costs, sols, s in rows:
        table.costs.append(costs)
        table.solutions.append(sols)
        swaps += s
    table.check()
    t3 = time.perf_counter()
    timings["regions"] = t3 - t2

    ells, total = knapsack_assemble(table.costs, k)
    D = sorted(set().union(*(table.solutions[i][ell] for i, ell in enumerate(ells))))
    boundary_union = division.boundary_vertices()
    assert boundary_union <= set(D)
    assert len(D) <= division.total_boundary + sum(ells)
    assert len(D) <= (1 + eps) * k + 1e-9, f"|D| = {len(D)} exceeds (1+eps)k"

    violations = _isolation_violations(instance, D, division, clients_of)
    if violations and strict:
        raise IsolationError(f"{violations} clients are served from outside their region")
    t4 = time.perf_counter()
    timings["assemble"] = t4 - t3
    stats = {
        "solver": "bicriteria",
        "eps": eps,
        "eps_internal": eps_int,
        "F0": len(F0),
        "support": len(weights),
        "r": r,
        "regions": len(division.regions),
        "boundary_total": division.total_boundary,
        "boundary_constant": division.total_boundary / (eps * k),
        "ells": ells,
        "table_total": total,
        "swaps": swaps,
        "isolation_violations": violations,
        "timings": timings,
    }
    return make_solution(instance, D, stats)


def _isolation_violations(instance, D, division, clients_of) -> int:
    """Count clients whose closest open facility is not in their own region."""
    D = list(D)
    if not D:
        return 0
    rows = distance_rows(instance.graph, D)
    pos = {f: i for i, f in enumerate(D)}
    bad = 0
    for R in division.regions:
        inside = [pos[f] for f in D if f in R.vertices]
        cl = clients_of[R.id]
        if not cl:
            continue
        overall = rows[:, cl].min(axis=0)
        local = rows[inside][:, cl].min(axis=0) if inside else np.full(len(cl), np.inf)
        tol = 1e-9 * np.maximum(1.0, overall)
        bad += int(np.sum(local > overall + tol))
    return bad


def _ufl_instance(instance_or_graph, clients=None, facilities=None, open_cost=None) -> Instance:
    if isinstance(instance_or_graph, Instance):
        inst = instance_or_graph
        if open_cost is not None:
            inst = Instance(inst.graph, inst.clients, inst.facilities, inst.k, inst.weights, open_cost)
    else:
        inst = Instance(instance_or_graph, tuple(clients), tuple(facilities), 1, None, open_cost)
    if inst.open_cost is None or inst.open_cost < 0:
        raise ValueError("a nonnegative opening cost is required")
    return inst


def ufl_solve(instance, eps: float, clients=None, facilities=None, open_cost=None,
              seed: int = 0, strategy: str = "sensitivity", c0: float = 10.0,
              reuse_coreset: bool = False) -> Solution:
    """Try every facility budget with the bicriteria solver; keep the cheapest total."""
    inst = _ufl_instance(instance, clients, facilities, open_cost)
    f = inst.open_cost
    best = None
    per_k = []
    cs = None
    for k in range(1, len(inst.facilities) + 1):
        ik = inst.with_k(k)
        if not reuse_coreset or cs is None or (k & (k - 1)) == 0:
            cs = build_coresets(ik, eps / BICRITERIA_SHRINK, strategy, c0, seed)
        sol = bicriteria_solve(ik, eps, seed, strategy, c0, coresets=cs)
        total = sol.size * f + sol.cost
        per_k.append({"k": k, "size": sol.size, "connection": sol.cost, "total": total})
        if best is None or total < best[0]:
            best = (total, k, sol)
    total, k, sol = best
    sol.stats = {"solver": "ufl", "eps": eps, "k": k, "total": total,
                 "open_cost": f, "per_k": per_k, "inner": sol.stats}
    return sol


def ufl_brute_force(instance, clients=None, facilities=None, open_cost=None,
                    budget: int = DEFAULT_BUDGET) -> Solution:
    """Exact UFL optimum over every nonempty ``D`` (ties to the smallest tuple)."""
    inst = _ufl_instance(instance, clients, facilities, open_cost)
    F = inst.facilities
    if 2 ** len(F) - 1 > budget:
        raise BudgetExceeded(f"{2 ** len(F) - 1} subsets exceed the budget {budget}")
    dm = inst.distance_matrix()
    w = inst.weight_vector()
    best = None
    for s in range(1, len(F) + 1):
        cost, rows = best_subset(dm, w, s, budget, sizes=[s])
        total = cost + s * inst.open_cost
        if best is None or total < best[0] - 1e-12 * max(1.0, abs(total)):
            best = (total, rows)
    total, rows = best
    D = [F[r] for r in rows]
    sol = make_solution(inst, D, {"solver": "ufl-oracle"})
    sol.stats["total"] = sol.cost + len(D) * inst.open_cost
    return sol


def solution_total(instance: Instance, sol: Solution) -> float:
    f = instance.open_cost or 0.0
    return sol.cost + f * sol.size


def oracle(instance: Instance, budget: int = DEFAULT_BUDGET) -> Solution:
    return brute_force_opt(instance, budget)
