"""k-Median / facility location instances, solutions and connection cost."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import embed
from .embed import EmbeddedGraph
from .metric import distance_rows


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    graph: EmbeddedGraph
    clients: tuple[int, ...]
    facilities: tuple[int, ...]
    k: int
    weights: Mapping[int, float] | None = None
    open_cost: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(sorted(set(self.clients))))
        object.__setattr__(self, "facilities", tuple(sorted(set(self.facilities))))
        if not self.clients or not self.facilities:
            raise InstanceError("clients and facilities must be nonempty")
        for v in self.clients + self.facilities:
            if not 0 <= v < self.graph.n:
                raise InstanceError(f"vertex {v} is not in the graph")
        if self.k < 0:
            raise InstanceError("k must be nonnegative")
        if self.weights is not None:
            extra = set(self.weights) - set(self.clients)
            if extra:
                raise InstanceError(f"weights on non-clients: {sorted(extra)[:5]}")

    def weight_vector(self, weights: Mapping[int, float] | None = None) -> np.ndarray:
        w = weights if weights is not None else self.weights
        if w is None:
            return np.ones(len(self.clients))
        return np.array([float(w.get(c, 0.0)) for c in self.clients])

    def distance_matrix(self) -> np.ndarray:
        """Facilities x clients distance matrix (rows follow ``facilities``)."""
        if "dm" not in self._cache:
            rows = distance_rows(self.graph, self.facilities)
            self._cache["dm"] = rows[:, list(self.clients)]
        return self._cache["dm"]

    def facility_index(self) -> dict[int, int]:
        if "fidx" not in self._cache:
            self._cache["fidx"] = {f: i for i, f in enumerate(self.facilities)}
        return self._cache["fidx"]

    def with_k(self, k: int) -> "Instance":
        return replace(self, k=k, _cache=self._cache)

    def with_weights(self, weights: Mapping[int, float] | None) -> "Instance":
        return replace(self, weights=weights, _cache=self._cache)

    def restricted(self, clients: Iterable[int] | None = None,
                   facilities: Iterable[int] | None = None, k: int | None = None) -> "Instance":
        return Instance(
            self.graph,
            tuple(clients) if clients is not None else self.clients,
            tuple(facilities) if facilities is not None else self.facilities,
            self.k if k is None else k,
            None,
            self.open_cost,
        )

    def digest(self) -> str:
        blob = json.dumps(to_json(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Solution:
    open: tuple[int, ...]
    cost: float
    assignment: dict[int, int] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.open)

    def to_json(self) -> dict:
        return {
            "open": list(self.open),
            "size": len(self.open),
            "connection_cost": self.cost,
            "assignment": {str(c): f for c, f in sorted(self.assignment.items())},
            "stats": self.stats,
        }


def cost_of_rows(dm: np.ndarray, rows: Sequence[int], w: np.ndarray) -> float:
    if len(rows) == 0:
        return float("inf")
    best = dm[list(rows)].min(axis=0)
    # zero-weight clients never contribute, even when unreachable
    mask = w > 0
    return float(np.dot(best[mask], w[mask]))


def conn_cost(instance: Instance, D: Iterable[int],
              weights: Mapping[int, float] | None = None) -> float:
    """Weighted connection cost of the open set ``D`` (``inf`` when empty)."""
    D = sorted(set(D))
    if not D:
        return float("inf")
    rows = distance_rows(instance.graph, D)[:, list(instance.clients)]
    w = instance.weight_vector(weights)
    best = rows.min(axis=0)
    mask = w > 0
    return float(np.dot(best[mask], w[mask]))


def assign(instance: Instance, D: Iterable[int]) -> dict[int, int]:
    """Client -> serving facility, ties broken by smallest facility id."""
    D = sorted(set(D))
    rows = distance_rows(instance.graph, D)[:, list(instance.clients)]
    idx = rows.argmin(axis=0)  # argmin returns the first (smallest id) minimum
    return {c: D[i] for c, i in zip(instance.clients, idx)}


def make_solution(instance: Instance, D: Iterable[int], stats: dict | None = None,
                  weights: Mapping[int, float] | None = None) -> Solution:
    D = tuple(sorted(set(D)))
    return Solution(
        open=D,
        cost=conn_cost(instance, D, weights),
        assignment=assign(instance, D),
        stats=dict(stats or {}),
    )


def to_json(instance: Instance) -> dict:
    data = {
        "graph": embed.to_json(instance.graph),
        "clients": list(instance.clients),
        "facilities": list(instance.facilities),
        "k": instance.k,
    }
    if instance.weights is not None:
        data["weights"] = {str(c): w for c, w in sorted(instance.weights.items())}
    if instance.open_cost is not None:
        data["open_cost"] = instance.open_cost
    return data


def from_json(data: Mapping) -> Instance:
    try:
        graph = embed.from_json(data["graph"])
        weights = data.get("weights")
        if weights is not None:
            weights = {int(c): float(w) for c, w in weights.items()}
        return Instance(
            graph,
            tuple(int(c) for c in data["clients"]),
            tuple(int(f) for f in data["facilities"]),
            int(data.get("k", 1)),
            weights,
            float(data["open_cost"]) if data.get("open_cost") is not None else None,
        )
    except KeyError as exc:
        raise InstanceError(f"missing field {exc}") from exc


def load(path) -> Instance:
    with open(path) as fh:
        return from_json(json.load(fh))


def dump(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(instance), fh, sort_keys=True, indent=1)
