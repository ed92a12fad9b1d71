"""Exact enumeration, local search with compulsory facilities, knapsack assembly."""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instance import Instance, Solution, make_solution

DEFAULT_BUDGET = 10**6
_CHUNK = 20000


class BudgetExceeded(RuntimeError):
    pass


class InfeasibleBudget(ValueError):
    pass


def subset_count(n: int, k: int) -> int:
    return sum(math.comb(n, s) for s in range(1, min(k, n) + 1))


def _cost_table(instance: Instance, facilities: Sequence[int], weights):
    idx = instance.facility_index()
    dm = instance.distance_matrix()[[idx[f] for f in facilities]]
    w = instance.weight_vector(weights)
    mask = w > 0
    return dm[:, mask], w[mask]


def best_subset(dm: np.ndarray, w: np.ndarray, k: int, budget: int = DEFAULT_BUDGET,
                sizes: Iterable[int] | None = None):
    """Minimise ``sum_c w_c min_{i in D} dm[i, c]`` over row subsets.

    Returns ``(cost, rows)``; ties go to the fewest rows, then to the
    lexicographically smallest sorted row tuple.
    """
    n = dm.shape[0]
    sizes = list(range(1, min(k, n) + 1)) if sizes is None else list(sizes)
    total = sum(math.comb(n, s) for s in sizes)
    if total > budget:
        raise BudgetExceeded(f"{total} candidate sets exceed the budget of {budget}")
    best_cost, best_rows = math.inf, None
    for s in sizes:
        if s == 0:
            continue
        it = itertools.combinations(range(n), s)
        while True:
            chunk = list(itertools.islice(it, _CHUNK))
            if not chunk:
                break
            arr = np.asarray(chunk, dtype=np.intp)
            vals = dm[arr].min(axis=1) @ w if w.size else np.zeros(len(arr))
            lo = float(vals.min())
            tol = 1e-12 * max(1.0, abs(lo)) if math.isfinite(lo) else 0.0
            rows = min(tuple(r) for r in arr[vals <= lo + tol].tolist())
            if best_rows is None or lo < best_cost - tol:
                best_cost, best_rows = lo, rows
            elif lo <= best_cost + tol and (len(rows), rows) < (len(best_rows), best_rows):
                best_rows = rows
    return best_cost, best_rows


def brute_force_opt(instance: Instance, budget: int = DEFAULT_BUDGET,
                    weights: Mapping[int, float] | None = None,
                    facilities: Sequence[int] | None = None) -> Solution:
    """Exact optimum over all ``D`` with ``1 <= |D| <= k``."""
    facilities = tuple(sorted(facilities if facilities is not None else instance.facilities))
    if instance.k < 1:
        raise ValueError("k must be at least 1")
    dm, w = _cost_table(instance, facilities, weights)
    _, rows = best_subset(dm, w, instance.k, budget)
    D = [facilities[r] for r in rows]
    return make_solution(instance, D, {"solver": "oracle", "candidates": len(facilities)}, weights)


def _threshold_factor(eps: float, budget: int, mode: str) -> float:
    if mode == "coarse":
        return 1.0 + eps
    if mode == "standard":
        return 1.0 + eps / (4.0 * max(budget, 1))
    raise ValueError(f"unknown threshold mode {mode!r}")


def local_search(instance: Instance, compulsory: Iterable[int], budget: int, eps: float,
                 radius: int | None = None, threshold: str = "standard",
                 exhaustive_limit: int = 12, weights: Mapping[int, float] | None = None,
                 facilities: Sequence[int] | None = None) -> Solution:
    """Swap-based local search that never touches the compulsory facilities.

    The free slots are filled greedily, then a move exchanges up to
    ``radius`` open free facilities for as many closed ones and is accepted
    when it divides the cost by at least the threshold factor.  Small free
    pools are solved exactly instead.
    """
    facilities = tuple(sorted(facilities if facilities is not None else instance.facilities))
    compulsory = tuple(sorted(set(compulsory)))
    if not set(compulsory) <= set(facilities):
        raise ValueError("compulsory facilities must be candidates")
    if budget < len(compulsory):
        raise InfeasibleBudget(f"budget {budget} < {len(compulsory)} compulsory facilities")
    if radius is None:
        radius = min(math.ceil(1.0 / eps**2), 3)
    comp_set = set(compulsory)
    free = [f for f in facilities if f not in comp_set]
    slots = min(budget - len(compulsory), len(free))
    dm_all, w = _cost_table(instance, facilities, weights)
    pos = {f: i for i, f in enumerate(facilities)}
    comp_rows = [pos[f] for f in compulsory]
    free_rows = [pos[f] for f in free]
    stats = {"solver": "local_search", "free": len(free), "iterations": 0}

    if comp_rows:
        base = dm_all[comp_rows].min(axis=0)
    else:
        base = np.full(dm_all.shape[1], np.inf)

    if slots == 0:
        chosen: list[int] = []
    elif len(free) <= exhaustive_limit:
        stats["exact"] = True
        sub = np.minimum(dm_all[free_rows], base[None, :]) if comp_rows else dm_all[free_rows]
        _, rows = best_subset(sub, w, slots, sizes=[slots])
        chosen = [free_rows[r] for r in rows]
    else:
        stats["exact"] = False
        chosen = _greedy(dm_all, w, base, free_rows, slots)
        chosen, iters, trace = _improve(dm_all, w, base, free_rows, chosen, radius,
                                        _threshold_factor(eps, budget, threshold))
        stats["iterations"] = iters
        stats["cost_trace"] = trace
    D = list(compulsory) + [facilities[r] for r in chosen]
    return make_solution(instance, D, stats, weights)


def _greedy(dm, w, base, free_rows, slots):
    chosen: list[int] = []
    cur = base.copy()
    for _ in range(slots):
        cand = [r for r in free_rows if r not in chosen]
        vals = np.minimum(cur[None, :], dm[cand]) @ w
        j = int(np.argmin(vals))
        chosen.append(cand[j])
        cur = np.minimum(cur, dm[cand[j]])
    return chosen


def _improve(dm, w, base, free_rows, chosen, radius, factor):
    chosen = sorted(chosen)

    def vec(rows):
        v = base
        if rows:
            v = np.minimum(v, dm[list(rows)].min(axis=0))
        return v

    cost = float(vec(chosen) @ w)
    trace = [cost]
    iters = 0
    while True:
        move = _find_move(dm, w, vec, free_rows, chosen, radius, cost / factor)
        if move is None:
            break
        chosen, new_cost = move
        if not new_cost < cost:
            break
        cost = new_cost
        trace.append(cost)
        iters += 1
    return chosen, iters, trace


def _find_move(dm, w, vec, free_rows, chosen, radius, target):
    """First improving swap in a fixed scan order; ``None`` when none exists."""
    closed = [r for r in free_rows if r not in set(chosen)]
    for t in range(1, radius + 1):
        if t > len(chosen) or t > len(closed):
            break
        closed_arr = np.asarray(closed, dtype=np.intp)
        for out in itertools.combinations(chosen, t):
            keep = [r for r in chosen if r not in out]
            b = vec(keep)
            # enumerate the first t-1 incoming rows, vectorise the last one
            for head in itertools.combinations(range(len(closed)), t - 1):
                hb = b
                if head:
                    hb = np.minimum(b, dm[[closed[h] for h in head]].min(axis=0))
                start = head[-1] + 1 if head else 0
                tail = closed_arr[start:]
                if tail.size == 0:
                    continue
                vals = np.minimum(hb[None, :], dm[tail]) @ w
                j = int(np.argmin(vals))
                if vals[j] <= target:
                    new = keep + [closed[h] for h in head] + [int(tail[j])]
                    return sorted(new), float(vals[j])
    return None


def knapsack_assemble(table: Sequence[Sequence[float]], k: int):
    """Choose ``l_R`` per region with ``sum l_R <= k`` minimising the total cost.

    ``table[R][l]`` is the cost of region ``R`` with ``l`` extra facilities.
    Returns ``(ells, total)``; among optimal vectors the scan keeps the first
    one found with the smallest counts.
    """
    INF = math.inf
    dp = [0.0] + [INF] * k
    choice: list[list[int]] = []
    for costs in table:
        new = [INF] * (k + 1)
        pick = [-1] * (k + 1)
        for used in range(k + 1):
            if dp[used] == INF:
                continue
            for ell in range(min(len(costs) - 1, k - used) + 1):
                val = dp[used] + costs[ell]
                if val < new[used + ell]:
                    new[used + ell] = val
                    pick[used + ell] = ell
        dp = new
        choice.append(pick)
    best_j = min(range(k + 1), key=lambda j: (dp[j], j))
    total = dp[best_j]
    ells = [0] * len(table)
    j = best_j
    for r in range(len(table) - 1, -1, -1):
        ells[r] = choice[r][j]
        j -= ells[r]
    return ells, total
