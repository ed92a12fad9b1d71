"""Experiment runner: solver x epsilon grid over a corpus of instance files."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import instance as inst_io
from .search import DEFAULT_BUDGET, subset_count
from .solve import bicriteria_solve, brute_force_opt, fpt_solve, ufl_brute_force, ufl_solve

SOLVERS = ("oracle", "fpt", "bicriteria", "ufl")
CSV_COLUMNS = ("instance", "digest", "solver", "eps", "seed", "cost", "oracle",
               "ratio", "size", "F0", "status", "error")


@dataclass
class RunReport:
    instance: str
    digest: str
    solver: str
    eps: float
    seed: int
    cost: float | None = None
    oracle: float | None = None
    ratio: float | None = None
    size: int | None = None
    F0: int | None = None
    status: str = "ok"
    error: str = ""
    timings: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def _run_one(inst, solver: str, eps: float, seed: int, budget: int):
    if solver == "oracle":
        sol = brute_force_opt(inst, budget)
        return sol.cost, sol.size, None, sol
    if solver == "fpt":
        sol = fpt_solve(inst, eps, seed=seed, budget=budget)
        return sol.cost, sol.size, sol.stats["F0"], sol
    if solver == "bicriteria":
        sol = bicriteria_solve(inst, eps, seed=seed)
        return sol.cost, sol.size, sol.stats["F0"], sol
    if solver == "ufl":
        sol = ufl_solve(inst, eps, seed=seed)
        return sol.stats["total"], sol.size, sol.stats["inner"]["F0"], sol
    raise ValueError(f"unknown solver {solver!r}")


def _oracle_cost(inst, solver: str, budget: int):
    if solver == "ufl":
        if 2 ** len(inst.facilities) - 1 > budget:
            return None
        return ufl_brute_force(inst, budget=budget).stats["total"]
    if subset_count(len(inst.facilities), inst.k) > budget:
        return None
    return brute_force_opt(inst, budget).cost


def run_suite(corpus: Iterable[str | Path], solvers: Sequence[str], eps_list: Sequence[float],
              seed: int = 0, budget: int = DEFAULT_BUDGET) -> list[RunReport]:
    reports: list[RunReport] = []
    for path in sorted(Path(p) for p in corpus):
        name = path.stem
        try:
            inst = inst_io.load(path)
            digest = inst.digest()
        except Exception as exc:  # noqa: BLE001 - a bad file is one failed row
            for solver in solvers:
                for eps in eps_list:
                    reports.append(RunReport(name, "", solver, eps, seed, status="error",
                                             error=f"{type(exc).__name__}: {exc}"))
            continue
        oracle_cache: dict[str, float | None] = {}
        for solver in solvers:
            for eps in eps_list:
                rep = RunReport(name, digest, solver, eps, seed)
                try:
                    t0 = time.perf_counter()
                    rep.cost, rep.size, rep.F0, _ = _run_one(inst, solver, eps, seed, budget)
                    rep.timings["solve"] = time.perf_counter() - t0
                    kind = "ufl" if solver == "ufl" else "kmedian"
                    if kind not in oracle_cache:
                        t1 = time.perf_counter()
                        oracle_cache[kind] = _oracle_cost(inst, solver, budget)
                        rep.timings["oracle"] = time.perf_counter() - t1
                    rep.oracle = oracle_cache[kind]
                    if rep.oracle is not None:
                        rep.ratio = 1.0 if rep.oracle == rep.cost else (
                            rep.cost / rep.oracle if rep.oracle > 0 else float("inf"))
                except Exception as exc:  # noqa: BLE001 - per-row failures are recorded
                    rep.status = "error"
                    rep.error = f"{type(exc).__name__}: {exc}"
                reports.append(rep)
    return reports


def write_reports(reports: Sequence[RunReport], json_path=None, csv_path=None) -> None:
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump([asdict(r) for r in reports], fh, indent=1, sort_keys=True)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
            writer.writeheader()
            for r in reports:
                writer.writerow(r.row())
