"""Command line front end: solve, bench, validate, gen.

Exit codes: 0 success, 1 infeasible or invalid input, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import List, Optional

from . import alns
from .model import (Instance, ParseError, evaluate_objective, parse_instance,
                    parse_solution, perturb_instance, validate_solution,
                    write_instance, write_solution)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2


@dataclass
class BenchPlan:
    """One benchmark campaign: repeated seeded runs per instance."""
    paths: List[str]
    repetitions: int = 10
    time_budget: float = 60.0
    iterations: Optional[int] = None
    b: bool = False
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


def _solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--instance", required=True, help="instance file to solve")
    p.add_argument("--b", type=int, choices=(0, 1), default=0,
                   help="objective variant: 0 distance, 1 adds route time (default 0)")
    p.add_argument("--time-limit", type=float, default=60.0, metavar="S",
                   help="wall-clock budget in seconds (default 60)")
    p.add_argument("--iterations", type=int, default=None, metavar="N",
                   help="fixed iteration count; overrides the time limit and "
                        "makes runs bit-identical for a seed")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--params", default=None, metavar="PRESET|FILE",
                   help="parameter preset (b0, b1, default) or a JSON file of "
                        "config overrides; default picks the preset for --b")
    p.add_argument("--disable", action="append", default=[], metavar="COMPONENT",
                   help="disable a component (repeatable): an operator name, "
                        "temperature-tuning, or implicit-time-windows")


def _load_config(args) -> alns.SearchConfig:
    preset = None
    overrides = {}
    if args.params:
        if args.params in alns.PRESETS:
            preset = args.params
        elif os.path.exists(args.params):
            with open(args.params) as fh:
                overrides = json.load(fh)
            preset = overrides.pop("preset", None)
        else:
            raise _Usage(f"--params {args.params!r} is neither a preset "
                         f"({', '.join(alns.PRESETS)}) nor a readable file")
    overrides.setdefault("time_budget", args.time_limit)
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    overrides["seed"] = args.seed
    disable = tuple(overrides.pop("disable", ())) + tuple(args.disable)
    overrides["disable"] = disable
    try:
        return alns.make_config(bool(args.b), preset=preset, **overrides)
    except (TypeError, ValueError) as e:
        raise _Usage(str(e))


class _Usage(Exception):
    pass


def _read_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            return parse_instance(fh.read())
    except OSError as e:
        raise _Invalid(f"cannot read {path}: {e.strerror}")
    except ParseError as e:
        raise _Invalid(f"{path}: {e}")


class _Invalid(Exception):
    pass


def cmd_solve(args) -> int:
    instance = _read_instance(args.instance)
    config = _load_config(args)
    t0 = time.monotonic()
    solution, stats = alns.run(instance, config)
    wall = time.monotonic() - t0
    cost = evaluate_objective(instance, solution, b=bool(args.b))
    meta = {
        "instance": instance.name,
        "b": args.b,
        "seed": args.seed,
        "iterations": args.iterations,
        "cost": float(cost.total),
        "distance": float(cost.distance),
        "time_term": float(cost.time_term),
        "vehicle_term": float(cost.vehicle_term),
    }
    out = args.out or os.path.basename(args.instance).rsplit(".", 1)[0] + ".sol.json"
    with open(out, "w") as fh:
        fh.write(write_solution(solution, meta=meta))
    if args.stats:
        with open(args.stats, "w") as fh:
            fh.write(stats.to_csv())
    print(f"cost={cost.total:.4f} routes={len(solution.routes)} "
          f"unassigned={len(solution.unassigned)} time={wall:.2f}s "
          f"seed={args.seed} out={out}")
    return EXIT_OK if not solution.unassigned else EXIT_INVALID


def run_bench(plan: BenchPlan) -> List[List[str]]:
    """Rows of the benchmark CSV: header, one row per instance, a total row."""
    reps = plan.repetitions
    header = (["instance", "m", "reps", "best", "avg", "routes_best"]
              + [f"cost_{k + 1}" for k in range(reps)])
    rows = [header]
    sum_best = sum_avg = 0.0
    sum_routes = 0
    total_m = 0
    for path in plan.paths:
        instance = _read_instance(path)
        costs = []
        best_cost = None
        best_routes = 0
        for k in range(reps):
            config = alns.make_config(
                plan.b, seed=plan.seed + k, time_budget=plan.time_budget,
                iterations=plan.iterations)
            solution, _ = alns.run(instance, config)
            c = float(evaluate_objective(instance, solution, b=plan.b).total)
            costs.append(c)
            if best_cost is None or c < best_cost:
                best_cost = c
                best_routes = len(solution.routes)
        avg = sum(costs) / reps
        rows.append([instance.name, str(instance.n - 1), str(reps),
                     repr(best_cost), repr(avg), str(best_routes)]
                    + [repr(c) for c in costs])
        sum_best += best_cost
        sum_avg += avg
        sum_routes += best_routes
        total_m += instance.n - 1
    rows.append(["TOTAL", str(total_m), str(reps), repr(sum_best),
                 repr(sum_avg), str(sum_routes)] + [""] * reps)
    return rows


def cmd_bench(args) -> int:
    try:
        plan = BenchPlan(paths=args.instance, repetitions=args.reps,
                         time_budget=args.time_limit, iterations=args.iterations,
                         b=bool(args.b), seed=args.seed, out=args.out)
    except ValueError as e:
        raise _Usage(str(e))
    rows = run_bench(plan)
    text = "\n".join(",".join(row) for row in rows) + "\n"
    if plan.out:
        with open(plan.out, "w") as fh:
            fh.write(text)
        print(f"wrote {plan.out} ({len(rows) - 2} instances x {plan.repetitions} reps)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = _read_instance(args.instance)
    try:
        with open(args.solution) as fh:
            solution = parse_solution(fh.read())
    except OSError as e:
        raise _Invalid(f"cannot read {args.solution}: {e.strerror}")
    except (ValueError, KeyError) as e:
        raise _Invalid(f"{args.solution}: {e}")
    report = validate_solution(instance.with_flags(minimise_time=bool(args.b)), solution)
    for line in report:
        print(line)
    if report:
        print(f"INVALID: {len(report)} violation(s)")
        return EXIT_INVALID
    print("valid")
    return EXIT_OK


def cmd_gen(args) -> int:
    instance = _read_instance(args.instance)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.basename(args.instance).rsplit(".", 1)[0]
    for k in range(args.count):
        variant = perturb_instance(instance, seed=args.seed + k)
        path = os.path.join(args.out_dir, f"{stem}_p{k}.txt")
        with open(path, "w") as fh:
            fh.write(write_instance(variant))
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vrpmtw",
        description="Vehicle routing with multiple time windows: solver, "
                    "benchmark runner, solution validator, instance generator.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one instance")
    _solver_flags(ps)
    ps.add_argument("--out", default=None, help="solution file path "
                    "(default: <instance>.sol.json in the working directory)")
    ps.add_argument("--stats", default=None, help="write search statistics CSV here")
    ps.set_defaults(func=cmd_solve)

    pb = sub.add_parser("bench", help="run a benchmark campaign")
    pb.add_argument("--instance", required=True, nargs="+",
                    help="instance files (one or more)")
    pb.add_argument("--b", type=int, choices=(0, 1), default=0,
                    help="objective variant (default 0)")
    pb.add_argument("--reps", type=int, default=10,
                    help="repetitions per instance (default 10)")
    pb.add_argument("--time-limit", type=float, default=60.0, metavar="S",
                    help="budget per run in seconds (default 60)")
    pb.add_argument("--iterations", type=int, default=None, metavar="N",
                    help="fixed iteration count per run; overrides the time limit")
    pb.add_argument("--seed", type=int, default=0,
                    help="base seed; run k uses seed+k (default 0)")
    pb.add_argument("--out", default=None, help="CSV path (default: stdout)")
    pb.set_defaults(func=cmd_bench)

    pv = sub.add_parser("validate", help="validate a solution file")
    pv.add_argument("--instance", required=True, help="instance file")
    pv.add_argument("--solution", required=True, help="solution JSON file")
    pv.add_argument("--b", type=int, choices=(0, 1), default=0,
                    help="objective variant the solution claims (default 0)")
    pv.set_defaults(func=cmd_validate)

    pg = sub.add_parser("gen", help="write window-permuted variants of an instance")
    pg.add_argument("--instance", required=True, help="source instance file")
    pg.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    pg.add_argument("--count", type=int, default=1, help="number of variants (default 1)")
    pg.add_argument("--out-dir", default=".", help="output directory (default: cwd)")
    pg.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _Invalid as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
