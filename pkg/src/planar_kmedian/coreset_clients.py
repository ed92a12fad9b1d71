"""Client coresets: small-support weight functions approximating every solution's cost."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .instance import Instance, Solution, make_solution
from .search import DEFAULT_BUDGET, BudgetExceeded, brute_force_opt, local_search, subset_count

STRATEGIES = ("passthrough", "sensitivity", "chen")


@dataclass(frozen=True)
class WeightFn:
    weights: Mapping[int, float]

    @classmethod
    def unit(cls, clients) -> "WeightFn":
        return cls({c: 1.0 for c in clients})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(c for c, w in self.weights.items() if w > 0))

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def __getitem__(self, c: int) -> float:
        return self.weights.get(c, 0.0)

    def combine(self, a: float, other: "WeightFn", b: float) -> "WeightFn":
        keys = set(self.weights) | set(other.weights)
        return WeightFn({c: a * self[c] + b * other[c] for c in sorted(keys)})


@dataclass(frozen=True)
class CoresetParams:
    eps: float = 0.25
    c0: float = 10.0
    strategy: str = "sensitivity"
    oversample: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.c0 < 1:
            raise ValueError("c0 must be at least 1")
        if self.oversample <= 0:
            raise ValueError("oversample must be positive")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown coreset strategy {self.strategy!r}")

    def support_bound(self, n: int, k: int) -> int:
        kk = k * k if self.strategy == "chen" else k
        return max(1, math.ceil(self.oversample * self.c0 * kk * math.log(max(n, 2)) / self.eps**2))


def approx_solution(instance: Instance, weights: Mapping[int, float] | None = None,
                    budget: int = DEFAULT_BUDGET) -> Solution:
    """Constant-factor solution: exact when enumeration is cheap, else local search."""
    F = instance.facilities
    if instance.k >= len(F):
        return make_solution(instance, F, {"solver": "approx", "exact": True}, weights)
    if subset_count(len(F), instance.k) <= budget:
        sol = brute_force_opt(instance, budget, weights)
        sol.stats.update(solver="approx", exact=True)
        return sol
    sol = local_search(instance, (), instance.k, eps=0.01, radius=1,
                       exhaustive_limit=0, weights=weights)
    sol.stats.update(solver="approx", exact=False)
    return sol


def build_client_coreset(instance: Instance, params: CoresetParams,
                         seed: int | np.random.Generator = 0,
                         approx: Solution | None = None) -> WeightFn:
    C = instance.clients
    if params.strategy == "passthrough":
        return WeightFn.unit(C)
    bound = params.support_bound(instance.graph.n, max(instance.k, 1))
    if len(C) <= bound:
        return WeightFn.unit(C)
    rng = np.random.default_rng(seed)
    if approx is None:
        approx = approx_solution(instance.with_weights(None))
    idx = instance.facility_index()
    dm = instance.distance_matrix()[[idx[f] for f in approx.open]]
    nearest = dm.argmin(axis=0)
    dist = dm.min(axis=0)
    if params.strategy == "sensitivity":
        return _sensitivity_sample(C, dist, nearest, bound, rng)
    return _ring_sample(C, dist, nearest, bound, rng)


def _sensitivity_sample(C, dist, nearest, m, rng) -> WeightFn:
    total = float(dist.sum())
    cluster_size = np.bincount(nearest)[nearest]
    sigma = 1.0 / cluster_size
    if total > 0:
        sigma = sigma + dist / total
    prob = sigma / sigma.sum()
    draws = rng.choice(len(C), size=m, replace=True, p=prob)
    weights: dict[int, float] = {}
    for i in draws.tolist():
        weights[C[i]] = weights.get(C[i], 0.0) + 1.0 / (m * prob[i])
    return WeightFn(dict(sorted(weights.items())))


def _ring_sample(C, dist, nearest, m, rng) -> WeightFn:
    """Uniform sampling inside geometric rings around each approximate center."""
    avg = float(dist.mean())
    if avg <= 0:
        ring = np.zeros(len(C), dtype=int)
    else:
        ring = np.maximum(0, np.ceil(np.log2(np.maximum(dist / avg, 1e-300)))).astype(int)
    groups: dict[tuple[int, int], list[int]] = {}
    for i, key in enumerate(zip(nearest.tolist(), ring.tolist())):
        groups.setdefault(key, []).append(i)
    per_group = max(1, m // max(len(groups), 1))
    weights: dict[int, float] = {}
    for key in sorted(groups):
        members = groups[key]
        if len(members) <= per_group:
            for i in members:
                weights[C[i]] = weights.get(C[i], 0.0) + 1.0
            continue
        for i in rng.choice(members, size=per_group, replace=True).tolist():
            weights[C[i]] = weights.get(C[i], 0.0) + len(members) / per_group
    return WeightFn(dict(sorted(weights.items())))


def verify_coreset(instance: Instance, omega: WeightFn | Mapping[int, float], eps: float,
                   budget: int = 200_000) -> bool:
    """Exact check of the coreset inequality over every ``D`` with ``|D| <= k``."""
    weights = omega.weights if isinstance(omega, WeightFn) else omega
    F = instance.facilities
    k = max(instance.k, 1)
    if subset_count(len(F), k) > budget:
        raise BudgetExceeded("too many candidate sets to verify the coreset")
    dm = instance.distance_matrix()
    w = instance.weight_vector(weights)
    for s in range(1, min(k, len(F)) + 1):
        for D in itertools.combinations(range(len(F)), s):
            d = dm[list(D)].min(axis=0)
            full = float(d.sum())
            approx = float(d[w > 0] @ w[w > 0])
            if abs(full - approx) > eps * full + 1e-9 * max(1.0, full):
                return False
    return True
