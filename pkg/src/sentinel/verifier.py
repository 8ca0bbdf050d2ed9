"""Lower/upper-bound scheduling problems, the three-way verdict, and a brute-force trajectory oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from sentinel import dynamics as dyn
from sentinel.dtp_solver import (
    DisjunctiveTemporalProblem,
    DtpSolution,
    feasible_zero_lateness,
    min_max_lateness,
)
from sentinel.dynamics import PiecewiseConstantInput, VehicleState
from sentinel.intersection import (
    BadSetVariant,
    IntersectionModel,
    Op,
    OperationGraph,
    build_operation_graph,
    nominal_variant,
)
from sentinel.schedparams import (
    LowerBoundParams,
    UpperBoundParams,
    lower_bound_params,
    upper_bound_params,
)

MODES = ("exact", "feasibility")


class Classification(str, Enum):
    SAFE = "Safe"
    UNDECIDED = "Undecided"
    UNSAFE = "Unsafe"


class InconsistentBounds(RuntimeError):
    """Lower bound positive while the upper bound is zero."""


@dataclass(frozen=True)
class Verdict:
    s_lower: float
    s_upper: float
    classification: Classification


@dataclass(frozen=True)
class LowerResult:
    cost: float
    times: Mapping[Op, tuple[float, float]]  # op -> (entry, exit)
    order: Mapping[tuple[Op, Op], Op]  # shared-area pair -> op that goes first
    problem: DisjunctiveTemporalProblem
    params: LowerBoundParams


@dataclass(frozen=True)
class UpperResult:
    cost: float
    entry: Mapping[int, float]  # vehicle id -> scheduled entry to its first active area
    order: Mapping[tuple[Op, Op], Op]
    problem: DisjunctiveTemporalProblem
    params: UpperBoundParams
    graph: OperationGraph


def _solve(problem: DisjunctiveTemporalProblem, mode: str) -> DtpSolution:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "feasibility":
        sol = feasible_zero_lateness(problem)
        return sol if sol is not None else DtpSolution(math.inf, (), ())
    sol = min_max_lateness(problem)
    # dropping every disjunction leaves a satisfiable system, and so does any vehicle priority
    assert sol.feasible, "no feasible orientation"
    return sol


def _order(pairs: Sequence[tuple[Op, Op]], sol: DtpSolution) -> dict[tuple[Op, Op], Op]:
    if not sol.feasible:
        return {}
    return {pair: pair[side] for pair, side in zip(pairs, sol.orientation)}


def lower_problem(
    model: IntersectionModel,
    graph: OperationGraph,
    params: LowerBoundParams,
    deadline_mode: str = "hard",
) -> DisjunctiveTemporalProblem:
    """Entry/exit variables per active operation; deadlines of later areas hard or soft."""
    if deadline_mode not in ("hard", "soft"):
        raise ValueError(f"deadline_mode must be 'hard' or 'soft', got {deadline_mode!r}")
    ops = graph.active_ops
    idx = {op: k for k, op in enumerate(ops)}
    t = lambda op: 2 * idx[op]  # noqa: E731
    p = lambda op: 2 * idx[op] + 1  # noqa: E731
    lbs, diffs, due, soft = [], [], [], []
    for op in ops:
        diffs.append((p(op), t(op), params.proc_min[op]))
        diffs.append((t(op), p(op), -params.proc_max[op]))
        if graph.is_first(op):
            lbs.append((t(op), params.release[op]))
            due.append((t(op), params.deadline[op]))
        else:
            prev = graph.previous[op]
            diffs.append((t(op), p(prev), params.gap_fast[op]))
            if deadline_mode == "hard":
                diffs.append((p(prev), t(op), -params.gap_slow[op]))
            else:
                soft.append((t(op), p(prev), params.gap_slow[op]))
    dis = [(((t(o2), p(o1), 0.0),), ((t(o1), p(o2), 0.0),)) for o1, o2 in graph.disjunctive]
    keys = [(o1[0], o1[1], o2[1]) for o1, o2 in graph.disjunctive]
    names = tuple(f"{kind}_{a}_{v}" for a, v in ops for kind in ("t", "p"))
    return DisjunctiveTemporalProblem(2 * len(ops), lbs, diffs, dis, due, soft, keys, names)


def solve_lower(
    model: IntersectionModel,
    states: Sequence[VehicleState],
    mode: str = "exact",
    deadline_mode: str = "hard",
) -> LowerResult:
    graph = build_operation_graph(model, [s.pos for s in states])
    params = lower_bound_params(model, graph, states)
    problem = lower_problem(model, graph, params, deadline_mode)
    sol = _solve(problem, mode)
    times = {}
    if sol.feasible:
        times = {op: (sol.times[2 * k], sol.times[2 * k + 1]) for k, op in enumerate(graph.active_ops)}
    return LowerResult(sol.cost, times, _order(graph.disjunctive, sol), problem, params)


def upper_problem(
    model: IntersectionModel, graph: OperationGraph, params: UpperBoundParams
) -> tuple[DisjunctiveTemporalProblem, tuple[int, ...]]:
    """One variable per vehicle with active operations: its first-area entry time."""
    vids = tuple(sorted(graph.first_of))
    var = {vid: k for k, vid in enumerate(vids)}
    lbs, due = [], []
    for vid in vids:
        first = graph.first_of[vid]
        lbs.append((var[vid], params.release[first]))
        due.append((var[vid], params.deadline[first]))
    dis, keys = [], []
    cT, cP = params.entry_offset, params.exit_offset
    for o1, o2 in graph.disjunctive:
        v1, v2 = var[o1[1]], var[o2[1]]
        dis.append((((v2, v1, cP[o1] - cT[o2]),), ((v1, v2, cP[o2] - cT[o1]),)))
        keys.append((o1[0], o1[1], o2[1]))
    names = tuple(f"T_{vid}" for vid in vids)
    return DisjunctiveTemporalProblem(len(vids), lbs, (), dis, due, (), keys, names), vids


def solve_upper(model: IntersectionModel, states: Sequence[VehicleState], mode: str = "exact") -> UpperResult:
    graph = build_operation_graph(model, [s.pos for s in states])
    params = upper_bound_params(model, graph, states)
    problem, vids = upper_problem(model, graph, params)
    sol = _solve(problem, mode)
    entry = {vid: sol.times[k] for k, vid in enumerate(vids)} if sol.feasible else {}
    return UpperResult(sol.cost, entry, _order(graph.disjunctive, sol), problem, params, graph)


def classify(s_lower: float, s_upper: float) -> Verdict:
    if s_lower < 0 or s_upper < 0 or math.isnan(s_lower) or math.isnan(s_upper):
        raise ValueError(f"costs must be non-negative, got {s_lower}, {s_upper}")
    if s_upper == 0:
        if s_lower > 0:
            raise InconsistentBounds(f"lower bound {s_lower} > 0 but upper bound is 0")
        return Verdict(s_lower, s_upper, Classification.SAFE)
    if s_lower > 0:
        return Verdict(s_lower, s_upper, Classification.UNSAFE)
    return Verdict(s_lower, s_upper, Classification.UNDECIDED)


def verify(model: IntersectionModel, states: Sequence[VehicleState], mode: str = "exact") -> Verdict:
    """Solve both bounds and classify.  In feasibility mode positive costs read as ``inf``."""
    lower = solve_lower(model, states, mode)
    upper = solve_upper(model, states, mode)
    return classify(lower.cost, upper.cost)


# ----------------------------------------------------------------------------
# brute-force oracle

ORACLE_MAX_VEHICLES = 3
ORACLE_MAX_OPS = 6


def candidate_signals(
    u_min: float, u_max: float, levels: int, switch_grid: float, horizon: float, switches: int
) -> list[PiecewiseConstantInput]:
    """Piecewise-constant signals with exactly ``switches`` level changes on the grid."""
    values = np.linspace(u_min, u_max, levels) if levels > 1 else np.array([u_max])
    times = np.arange(1, int(math.floor(horizon / switch_grid + 1e-9)) + 1) * switch_grid
    times = times[times < horizon]
    out = []
    for bps in itertools.combinations(times, switches):
        for seq in itertools.product(values, repeat=switches + 1):
            if any(a == b for a, b in zip(seq, seq[1:])):
                continue
            out.append(PiecewiseConstantInput((0.0, *bps), seq))
    return out


def _occupancy(
    model: IntersectionModel,
    variant: BadSetVariant,
    vid: int,
    state: VehicleState,
    signal: PiecewiseConstantInput,
) -> dict[Op, tuple[float, float]]:
    """Open time interval during which the vehicle is strictly inside each variant interval."""
    spec = model.spec(vid)
    spans = {op: variant.intervals.get(op) for op in model.route(vid)}
    targets = sorted({x for iv in spans.values() if iv is not None for x in iv})
    times = dyn.crossing_times(state, spec, signal, targets) if targets else []
    at = dict(zip(targets, times))
    out = {}
    for op, iv in spans.items():
        if iv is None or state.pos >= iv[1]:
            continue
        out[op] = (at[iv[0]], at[iv[1]])
    return out


def default_horizon(model: IntersectionModel, states: Sequence[VehicleState]) -> float:
    """Time for the slowest admissible vehicle to clear its last area."""
    worst = 0.0
    for spec, s in zip(model.vehicles, states):
        if model.route(spec.id):
            worst = max(worst, (model.route_end(spec.id) - s.pos) / spec.v_min)
    return max(worst, 0.0)


def oracle_search(
    model: IntersectionModel,
    states: Sequence[VehicleState],
    horizon: float | None = None,
    input_levels: int = 3,
    switch_grid: float = 0.25,
    variant: BadSetVariant | None = None,
    max_switches: int = 2,
) -> tuple[PiecewiseConstantInput, ...] | None:
    """First joint signal (fewest switches first) that keeps the vehicles out of ``variant``.

    Success proves a safe input exists; ``None`` proves nothing because the
    signal set is a finite grid.
    """
    n_ops = len(model.ops())
    if model.n > ORACLE_MAX_VEHICLES or n_ops > ORACLE_MAX_OPS:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_VEHICLES} vehicles and {ORACLE_MAX_OPS} operations, "
            f"got {model.n} and {n_ops}"
        )
    variant = variant or nominal_variant(model)
    horizon = default_horizon(model, states) if horizon is None else horizon
    areas = model.area_ids
    for depth in range(max_switches + 1):
        per_vehicle = []  # (signals, entry array [cands, areas], exit array)
        for spec, state in zip(model.vehicles, states):
            sigs = candidate_signals(spec.u_min, spec.u_max, input_levels, switch_grid, horizon, depth)
            if depth > 0:
                # keep lower-depth candidates so mixed depths are searched too
                for d in range(depth):
                    sigs = candidate_signals(spec.u_min, spec.u_max, input_levels, switch_grid, horizon, d) + sigs
            ent = np.full((len(sigs), len(areas)), np.inf)
            ext = np.full((len(sigs), len(areas)), -np.inf)
            for c, sig in enumerate(sigs):
                for op, (e, x) in _occupancy(model, variant, spec.id, state, sig).items():
                    a = areas.index(op[0])
                    ent[c, a], ext[c, a] = e, x
            per_vehicle.append((sigs, ent, ext))
        found = _joint_search(per_vehicle)
        if found is not None:
            return tuple(per_vehicle[j][0][c] for j, c in enumerate(found))
    return None


def _compatible(ent_a, ext_a, ent_b, ext_b) -> np.ndarray:
    """Rows of b whose occupancy is disjoint from the single candidate a on every area."""
    ok = (ext_a <= ent_b) | (ext_b <= ent_a)
    return ok.all(axis=1)


def _joint_search(per_vehicle) -> list[int] | None:
    n = len(per_vehicle)
    masks = [np.ones(len(p[0]), dtype=bool) for p in per_vehicle]

    def rec(j: int, chosen: list[int], allowed: list[np.ndarray]) -> list[int] | None:
        if j == n:
            return chosen
        sigs, ent, ext = per_vehicle[j]
        for c in np.flatnonzero(allowed[j]):
            nxt = list(allowed)
            ok = True
            for k in range(j + 1, n):
                _, ent_k, ext_k = per_vehicle[k]
                nxt[k] = allowed[k] & _compatible(ent[c], ext[c], ent_k, ext_k)
                if not nxt[k].any():
                    ok = False
                    break
            if ok:
                res = rec(j + 1, chosen + [int(c)], nxt)
                if res is not None:
                    return res
        return None

    return rec(0, [], masks)
