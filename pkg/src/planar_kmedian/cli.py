"""Command-line entry point: ``planar-kmedian <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import instance as inst_io
from .coreset_clients import STRATEGIES, CoresetParams, build_client_coreset
from .coreset_facilities import build_facility_coreset
from .embed import EmbeddingError
from .generate import KINDS, GeneratorError, GeneratorSpec, generate
from .instance import InstanceError
from .render import RenderError, render_instance
from .search import DEFAULT_BUDGET, BudgetExceeded
from .solve import bicriteria_solve, brute_force_opt, fpt_solve, ufl_solve
from .suite import SOLVERS, run_suite, write_reports

EXIT_OK, EXIT_FAILURES, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    pass


def _write_json(data, out) -> None:
    text = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(path):
    try:
        return inst_io.load(path)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, InstanceError, EmbeddingError, ValueError) as exc:
        raise InputError(f"invalid instance {path}: {exc}") from exc


def _split_timings(stats: dict) -> tuple[dict, dict]:
    stats = dict(stats)
    timings = stats.pop("timings", {})
    if "inner" in stats and isinstance(stats["inner"], dict):
        inner, t = _split_timings(stats["inner"])
        stats["inner"] = inner
        timings = {**timings, **{f"inner.{k}": v for k, v in t.items()}}
    return stats, timings


def _result(instance, sol, elapsed: float) -> dict:
    stats, timings = _split_timings(sol.stats)
    timings["total"] = elapsed
    open_cost = instance.open_cost or 0.0
    return {
        "open": list(sol.open),
        "size": sol.size,
        "connection_cost": sol.cost,
        "total_cost": sol.cost + open_cost * sol.size,
        "digest": instance.digest(),
        "stats": stats,
        "timings": timings,
    }


def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        kind=args.kind, rows=args.rows, cols=args.cols, weight_low=args.weight_low,
        weight_high=args.weight_high, deletion_fraction=args.deletion_fraction,
        diagonals=args.diagonals, client_fraction=args.client_fraction,
        facility_fraction=args.facility_fraction, clients=args.clients,
        facilities=args.facilities, k=args.k, open_cost=args.open_cost, seed=args.seed,
    )
    try:
        inst = generate(spec)
    except GeneratorError as exc:
        raise InputError(str(exc)) from exc
    _write_json(inst_io.to_json(inst), args.out)
    return EXIT_OK


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise InputError("epsilon must be positive")


def cmd_solve(args) -> int:
    _check_eps(args.epsilon)
    inst = _load(args.input)
    if args.command == "solve-ufl" and inst.open_cost is None:
        if args.open_cost is None:
            raise InputError("UFL needs an opening cost (instance field or --open-cost)")
    t0 = time.perf_counter()
    try:
        if args.command == "oracle":
            sol = brute_force_opt(inst, args.budget)
        elif args.command == "solve-fpt":
            sol = fpt_solve(inst, args.epsilon, seed=args.seed, strategy=args.coreset,
                            c0=args.coreset_c0, budget=args.budget)
        elif args.command == "solve-bicriteria":
            sol = bicriteria_solve(inst, args.epsilon, seed=args.seed, strategy=args.coreset,
                                   c0=args.coreset_c0)
        else:
            sol = ufl_solve(inst, args.epsilon, open_cost=args.open_cost, seed=args.seed,
                            strategy=args.coreset, c0=args.coreset_c0,
                            reuse_coreset=args.reuse_coreset)
            if args.open_cost is not None:
                inst = inst_io.Instance(inst.graph, inst.clients, inst.facilities, inst.k,
                                        inst.weights, args.open_cost)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURES
    _write_json(_result(inst, sol, time.perf_counter() - t0), args.out)
    return EXIT_OK


def cmd_coreset(args) -> int:
    _check_eps(args.epsilon)
    inst = _load(args.input)
    t0 = time.perf_counter()
    params = CoresetParams(eps=min(args.epsilon, 0.99), c0=args.coreset_c0, strategy=args.coreset)
    omega = build_client_coreset(inst, params, args.seed)
    fc = build_facility_coreset(inst, omega, args.epsilon)
    data = fc.to_json()
    data["support"] = len(omega.support)
    data["L"] = fc.stats.get("L")
    data["scale_factor"] = fc.stats.get("factor")
    data["timings"] = {"total": time.perf_counter() - t0}
    _write_json(data, args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    inst = _load(args.input)
    opened = []
    if args.solution:
        try:
            opened = json.loads(Path(args.solution).read_text())["open"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise InputError(f"invalid solution file: {exc}") from exc
    sites = [int(s) for s in args.sites.split(",")] if args.sites else None
    try:
        svg = render_instance(inst, sites, opened, args.highlight)
    except RenderError as exc:
        raise InputError(str(exc)) from exc
    Path(args.out).write_text(svg)
    return EXIT_OK


def _corpus(paths) -> list[Path]:
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        elif p.exists():
            files.append(p)
        else:
            raise InputError(f"no such corpus entry: {p}")
    return files


def cmd_suite(args) -> int:
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    bad = [s for s in solvers if s not in SOLVERS]
    if bad:
        raise InputError(f"unknown solvers: {bad}")
    reports = run_suite(_corpus(args.corpus), solvers, args.epsilon, args.seed, args.budget)
    write_reports(reports, args.out_json, args.out_csv)
    if args.out_json is None and args.out_csv is None:
        _write_json([r.row() for r in reports], None)
    return EXIT_FAILURES if any(r.status != "ok" for r in reports) else EXIT_OK


def _common(p, eps=True):
    p.add_argument("--input", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--seed", type=int, default=0)
    if eps:
        p.add_argument("--epsilon", type=float, default=0.25)
        p.add_argument("--coreset", choices=STRATEGIES, default="sensitivity")
        p.add_argument("--coreset-c0", type=float, default=10.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planar-kmedian")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random grid instance")
    g.add_argument("--kind", choices=KINDS, default="grid")
    g.add_argument("--rows", type=int, default=3)
    g.add_argument("--cols", type=int, default=3)
    g.add_argument("--weight-low", type=int, default=1)
    g.add_argument("--weight-high", type=int, default=10)
    g.add_argument("--deletion-fraction", type=float, default=0.0)
    g.add_argument("--diagonals", action="store_true")
    g.add_argument("--client-fraction", type=float)
    g.add_argument("--facility-fraction", type=float)
    g.add_argument("--clients", type=int)
    g.add_argument("--facilities", type=int)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--open-cost", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    for name in ("solve-fpt", "solve-bicriteria", "solve-ufl", "oracle"):
        p = sub.add_parser(name)
        _common(p)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        if name == "solve-ufl":
            p.add_argument("--open-cost", type=float)
            p.add_argument("--reuse-coreset", action="store_true")
        p.set_defaults(func=cmd_solve)

    c = sub.add_parser("coreset-facilities")
    _common(c)
    c.set_defaults(func=cmd_coreset)

    r = sub.add_parser("render")
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--solution")
    r.add_argument("--sites", help="comma-separated site ids (default: the clients)")
    r.add_argument("--highlight", type=int, help="diamond id to shade")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("run-suite")
    s.add_argument("--corpus", nargs="*", default=[])
    s.add_argument("--solvers", default="oracle")
    s.add_argument("--epsilon", type=float, nargs="+", default=[0.25])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--out-json")
    s.add_argument("--out-csv")
    s.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
