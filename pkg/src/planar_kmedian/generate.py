"""Grid-based planar instance generators."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import embed
from .instance import Instance

KINDS = ("grid", "grid-random-weights", "grid-with-deletions")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "grid"
    rows: int = 3
    cols: int = 3
    weight_low: int = 1
    weight_high: int = 10
    deletion_fraction: float = 0.0
    diagonals: bool = False
    client_fraction: float | None = None
    facility_fraction: float | None = None
    clients: int | None = None
    facilities: int | None = None
    k: int = 1
    open_cost: float | None = None
    seed: int = 0
    max_resamples: int = 100

    def to_json(self) -> dict:
        return asdict(self)


def grid_graph(rows: int, cols: int, lengths=None, diagonals=None, deleted=frozenset()):
    """Embedded grid; ``diagonals[r][c]`` picks the diagonal of cell (r, c)."""
    coords = [(float(c), float(r)) for r in range(rows) for c in range(cols)]
    pairs = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                pairs.append((v, v + 1))
            if r + 1 < rows:
                pairs.append((v, v + cols))
    if diagonals is not None:
        for r in range(rows - 1):
            for c in range(cols - 1):
                v = r * cols + c
                if diagonals[r][c]:
                    pairs.append((v, v + cols + 1))
                else:
                    pairs.append((v + 1, v + cols))
    edge_list = []
    for i, (a, b) in enumerate(pairs):
        if i in deleted:
            continue
        length = 1.0 if lengths is None else float(lengths[i])
        edge_list.append((a, b, length))
    return embed.build(rows * cols, edge_list, coords=coords)


def generate(spec: GeneratorSpec) -> Instance:
    if spec.kind not in KINDS:
        raise GeneratorError(f"unknown generator kind {spec.kind!r}")
    if spec.rows < 1 or spec.cols < 1 or spec.rows * spec.cols < 2:
        raise GeneratorError("grid needs at least two vertices")
    rng = np.random.default_rng(spec.seed)
    rows, cols = spec.rows, spec.cols
    n = rows * cols
    diagonals = None
    if spec.diagonals:
        diagonals = rng.integers(0, 2, size=(max(rows - 1, 0), max(cols - 1, 0))).tolist()
    base = grid_graph(rows, cols, diagonals=diagonals)
    m = base.m
    lengths = None
    if spec.kind in ("grid-random-weights", "grid-with-deletions"):
        lengths = rng.integers(spec.weight_low, spec.weight_high + 1, size=m).tolist()

    deleted: set[int] = set()
    if spec.kind == "grid-with-deletions" and spec.deletion_fraction > 0:
        target = int(round(spec.deletion_fraction * m))
        order = rng.permutation(m).tolist()
        rejected = 0
        for eid in order:
            if len(deleted) >= target:
                break
            trial = grid_graph(rows, cols, diagonals=diagonals, deleted=frozenset(deleted | {eid}))
            if len(trial.components()) == 1:
                deleted.add(eid)
            else:
                rejected += 1
                if rejected > spec.max_resamples:
                    raise GeneratorError("could not delete edges without disconnecting")
    graph = grid_graph(rows, cols, lengths=lengths, diagonals=diagonals, deleted=frozenset(deleted))

    def count(fraction, absolute, default):
        if absolute is not None:
            return int(min(max(absolute, 1), n))
        if fraction is not None:
            return int(min(max(rng.binomial(n, fraction), 1), n))
        return default

    n_clients = count(spec.client_fraction, spec.clients, n)
    n_facilities = count(spec.facility_fraction, spec.facilities, n)
    clients = sorted(rng.choice(n, size=n_clients, replace=False).tolist())
    facilities = sorted(rng.choice(n, size=n_facilities, replace=False).tolist())
    return Instance(graph, tuple(clients), tuple(facilities), spec.k, None, spec.open_cost)
