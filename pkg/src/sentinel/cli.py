"""``sentinel`` command line.

Commands: verify, simulate, open-loop, bench, export-lp.  A scenario argument
is a JSON path or the name of a bundled fixture (fig3, fig1, single,
forced_overlap, head_on).  Set ``SENTINEL_LOG=DEBUG|INFO|WARNING`` for logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from sentinel.dtp_solver import to_lp
from sentinel.dynamics import VehicleState
from sentinel.simharness import (
    Scenario,
    ScenarioError,
    atomic_write,
    fixture_path,
    load_scenario,
    run_closed_loop,
    run_open_loop,
    write_log,
)
from sentinel.intersection import build_operation_graph
from sentinel.schedparams import lower_bound_params, upper_bound_params
from sentinel.supervisor import SupervisorInvariantError, SupervisorRefusal, initialize, supervisor_step
from sentinel.verifier import Classification, lower_problem, solve_lower, solve_upper, upper_problem, classify

EXIT_CODES = {Classification.SAFE: 0, Classification.UNDECIDED: 2, Classification.UNSAFE: 3}
EXIT_ERROR = 1
BUDGET = 0.1

log = logging.getLogger("sentinel")


def _resolve(arg: str) -> Path:
    p = Path(arg)
    if p.exists() or p.suffix == ".json":
        return p
    return fixture_path(arg)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _scenario(args) -> Scenario:
    sc = load_scenario(_resolve(args.scenario))
    x0 = getattr(args, "x0", None)
    v0 = getattr(args, "v0", None)
    if x0 is None and v0 is None:
        return sc
    pos = _floats(x0) if x0 else [s.pos for s in sc.initial]
    spd = _floats(v0) if v0 else [s.speed for s in sc.initial]
    if len(pos) != sc.model.n or len(spd) != sc.model.n:
        raise ScenarioError(f"--x0/--v0 need {sc.model.n} comma-separated values")
    return sc.with_initial([VehicleState(x, v) for x, v in zip(pos, spd)])


def cmd_verify(args) -> int:
    sc = _scenario(args)
    lower = solve_lower(sc.model, sc.initial, args.mode)
    upper = solve_upper(sc.model, sc.initial, args.mode)
    verdict = classify(lower.cost, upper.cost)
    print(f"s_lower {lower.cost:.9g}")
    print(f"s_upper {upper.cost:.9g}")
    print(f"classification {verdict.classification.value}")
    return EXIT_CODES[verdict.classification]


def _summary(log_, wall: float, steps: int) -> None:
    uppers = [r.s_upper for r in log_.rows if r.s_upper == r.s_upper]
    print(f"steps {steps}")
    print(f"overrides {log_.overrides}")
    print(f"max_s_upper {max(uppers, default=0.0):.9g}")
    print(f"bad_set_entries {sum(log_.step_flags('in_bad'))}")
    print(f"shrunk_entries {sum(log_.step_flags('in_shrunk'))}")
    print(f"inflated_entries {sum(log_.step_flags('in_inflated'))}")
    per_step = log_.step_seconds or ([wall / steps] if steps else [])
    if per_step:
        arr = np.array(per_step)
        print(f"step_seconds p50 {np.median(arr):.6f} max {arr.max():.6f}")


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    tic = time.perf_counter()
    out = run_closed_loop(sc, bounds_mode=args.bounds, subsample=args.subsample, supervisor_mode=args.mode)
    wall = time.perf_counter() - tic
    write_log(out, args.out)
    _summary(out, wall, sc.steps)
    return 0


def cmd_open_loop(args) -> int:
    sc = _scenario(args)
    tic = time.perf_counter()
    out = run_open_loop(sc, bounds_mode=args.bounds, subsample=args.subsample)
    wall = time.perf_counter() - tic
    write_log(out, args.out)
    _summary(out, wall, sc.steps)
    return 0


def bench_latencies(sc: Scenario, iterations: int, mode: str, seed: int | None, warmup: bool = True) -> np.ndarray:
    """Wall time of each supervisor step along a supervised run."""
    rng = random.Random(seed) if seed is not None else None
    if warmup:
        store = initialize(sc.model, sc.initial, sc.tau, mode)
        supervisor_step(store, sc.initial, sc.desired_at(0.0))
    states = list(sc.initial)
    store = initialize(sc.model, states, sc.tau, mode)
    out = []
    for k in range(iterations):
        if rng is None:
            desired = sc.desired_at(k * sc.tau)
        else:
            desired = [rng.uniform(spec.u_min, spec.u_max) for spec in sc.model.vehicles]
        tic = time.perf_counter()
        outcome = supervisor_step(store, states, desired)
        out.append(time.perf_counter() - tic)
        states = list(outcome.next_states)
    return np.array(out)


def cmd_bench(args) -> int:
    sc = _scenario(args)
    lat = bench_latencies(sc, args.iterations, args.mode, args.seed)
    p50, p95, mx = np.median(lat), np.percentile(lat, 95), lat.max()
    print(f"iterations {len(lat)}")
    print(f"p50 {p50:.6f}")
    print(f"p95 {p95:.6f}")
    print(f"max {mx:.6f}")
    print(f"budget {BUDGET:.3f} {'ok' if mx <= BUDGET else 'exceeded'}")
    if args.out:
        atomic_write(args.out, "".join(f"{x:.9g}\n" for x in lat))
    return 0


def cmd_export_lp(args) -> int:
    sc = _scenario(args)
    graph = build_operation_graph(sc.model, [s.pos for s in sc.initial])
    if args.which == "lower":
        problem = lower_problem(sc.model, graph, lower_bound_params(sc.model, graph, sc.initial))
    else:
        problem, _ = upper_problem(sc.model, graph, upper_bound_params(sc.model, graph, sc.initial))
    text = to_lp(problem)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentinel", description="Intersection safety verification and supervision")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode_default: str) -> None:
        p.add_argument("scenario", help="scenario JSON path or bundled fixture name")
        p.add_argument("--mode", choices=("exact", "feasibility"), default=mode_default)
        p.add_argument("--x0", help="comma-separated initial positions overriding the scenario")
        p.add_argument("--v0", help="comma-separated initial speeds overriding the scenario")

    p = sub.add_parser("verify", help="classify the scenario's initial state")
    common(p, "exact")
    p.set_defaults(func=cmd_verify)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "supervised run, CSV log"),
        ("open-loop", cmd_open_loop, "unsupervised run, CSV log"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p, "feasibility")
        p.add_argument("--out", required=True, help="CSV output path")
        p.add_argument("--subsample", type=float, default=1e-3, help="bad-set monitoring period (s)")
        p.add_argument("--bounds", choices=("exact", "feasibility", "off"), default="exact",
                       help="how s_lower/s_upper columns are computed")
        p.set_defaults(func=func)

    p = sub.add_parser("bench", help="supervisor step latency")
    common(p, "feasibility")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--seed", type=int, default=None, help="use random desired inputs from this seed")
    p.add_argument("--out", help="write raw latencies (s), one per line")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-lp", help="write the lower or upper problem as LP text")
    common(p, "exact")
    p.add_argument("--which", choices=("lower", "upper"), default="upper")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.set_defaults(func=cmd_export_lp)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("SENTINEL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "iterations", 1) is not None and getattr(args, "iterations", 1) < 1:
        print("error: --iterations must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (ScenarioError, SupervisorRefusal, SupervisorInvariantError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
