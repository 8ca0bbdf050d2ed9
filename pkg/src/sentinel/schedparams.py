"""Scheduling parameters for the lower- and upper-bound problems, plus shrunk/inflated areas.

Every quantity here is an extremal arrival time or travel distance.  By input
monotonicity these come from constant ``u_max`` / ``u_min`` trajectories, so
each reduces to one call into :mod:`sentinel.dynamics`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping, Sequence

from sentinel import dynamics as dyn
from sentinel.dynamics import VehicleSpec, VehicleState
from sentinel.intersection import (
    BadSetVariant,
    IntersectionModel,
    Op,
    OperationGraph,
    first_area_start,
)


@dataclass(frozen=True)
class LowerBoundParams:
    """Release/deadline of first operations and the linear windows of the rest.

    ``gap_fast`` / ``gap_slow`` are keyed by the non-first operation and bound
    its entry time relative to the exit of its predecessor on the route.
    """

    release: Mapping[Op, float]
    deadline: Mapping[Op, float]
    gap_fast: Mapping[Op, float]
    gap_slow: Mapping[Op, float]
    proc_min: Mapping[Op, float]
    proc_max: Mapping[Op, float]


@dataclass(frozen=True)
class UpperBoundParams:
    """Release/deadline of first operations and affine entry/exit offsets.

    With ``T`` the scheduled first-area entry of vehicle ``j``, operation
    ``op`` of that vehicle is entered no earlier than ``T + entry_offset[op]``
    and left no later than ``T + exit_offset[op]``.
    """

    release: Mapping[Op, float]
    deadline: Mapping[Op, float]
    entry_offset: Mapping[Op, float]
    exit_offset: Mapping[Op, float]
    inside: Mapping[int, bool]


def lower_bound_params(
    model: IntersectionModel, graph: OperationGraph, states: Sequence[VehicleState]
) -> LowerBoundParams:
    release: dict[Op, float] = {}
    deadline: dict[Op, float] = {}
    gap_fast: dict[Op, float] = {}
    gap_slow: dict[Op, float] = {}
    proc_min: dict[Op, float] = {}
    proc_max: dict[Op, float] = {}
    for op in graph.active_ops:
        spec = model.spec(op[1])
        state = states[model.index_of(op[1])]
        alpha, beta = model.interval(op)
        length = beta - alpha
        if graph.is_first(op):
            if state.pos < alpha:
                release[op] = dyn.min_time_to(state, spec, alpha)
                deadline[op] = dyn.max_time_to(state, spec, alpha)
            else:
                release[op] = deadline[op] = 0.0
                # already inside: only the remaining distance has to be covered
                length = beta - state.pos
        else:
            gap = alpha - model.beta(graph.previous[op])
            gap_fast[op] = gap / spec.v_max
            gap_slow[op] = gap / spec.v_min
        proc_min[op] = length / spec.v_max
        proc_max[op] = length / spec.v_min
    return LowerBoundParams(release, deadline, gap_fast, gap_slow, proc_min, proc_max)


def _time_from(spec: VehicleSpec, start: float, speed: float, target: float) -> float:
    return dyn.min_time_to(VehicleState(start, speed), spec, target)


@functools.lru_cache(maxsize=64)
def outside_offsets(model: IntersectionModel) -> dict[Op, tuple[float, float]]:
    """State-independent (entry, exit) offsets used while a vehicle is still before its first area.

    First area: ``(0, t*)`` with ``t*`` the fastest crossing when entering at
    ``v_min``.  Later areas: fastest arrival entering the first area at
    ``v_max`` and fastest exit entering it at ``v_min``.
    """
    out: dict[Op, tuple[float, float]] = {}
    for spec in model.vehicles:
        route = model.route(spec.id)
        if not route:
            continue
        a0 = model.alpha(route[0])
        out[route[0]] = (0.0, _time_from(spec, a0, spec.v_min, model.beta(route[0])))
        for op in route[1:]:
            alpha, beta = model.interval(op)
            out[op] = (_time_from(spec, a0, spec.v_max, alpha), _time_from(spec, a0, spec.v_min, beta))
    return out


def upper_bound_params(
    model: IntersectionModel, graph: OperationGraph, states: Sequence[VehicleState]
) -> UpperBoundParams:
    static = outside_offsets(model)
    release: dict[Op, float] = {}
    deadline: dict[Op, float] = {}
    entry: dict[Op, float] = {}
    exit_: dict[Op, float] = {}
    inside: dict[int, bool] = {}
    for vid, first in graph.first_of.items():
        spec = model.spec(vid)
        state = states[model.index_of(vid)]
        a_min = first_area_start(model, vid)
        ops = [op for op in model.route(vid) if op in graph.previous or op == first]
        if state.pos < a_min:
            inside[vid] = False
            release[first] = dyn.min_time_to(state, spec, a_min)
            deadline[first] = dyn.max_time_to(state, spec, a_min)
            for op in ops:
                entry[op], exit_[op] = static[op]
        else:
            # committed: full throttle from the current state, schedule pinned
            inside[vid] = True
            r = dyn.min_time_to(state, spec, model.alpha(first))
            release[first] = deadline[first] = r
            for op in ops:
                alpha, beta = model.interval(op)
                entry[op] = dyn.min_time_to(state, spec, alpha) - r
                exit_[op] = dyn.min_time_to(state, spec, beta) - r
    return UpperBoundParams(release, deadline, entry, exit_, inside)


def _reach(spec: VehicleSpec, start: float, speed: float, u: float, duration: float) -> float:
    return dyn.position_after(VehicleState(start, speed), spec, u, duration)


def shrunk_areas(model: IntersectionModel) -> BadSetVariant:
    """Sub-intervals every admissible crossing consistent with the lower bound must occupy."""
    out: dict[Op, tuple[float, float] | None] = {}
    for spec in model.vehicles:
        route = model.route(spec.id)
        if not route:
            continue
        a0, b0 = model.interval(route[0])
        out[route[0]] = (a0, _reach(spec, a0, spec.v_min, spec.u_min, (b0 - a0) / spec.v_max))
        for op in route[1:]:
            alpha, beta = model.interval(op)
            lo = _reach(spec, a0, spec.v_max, spec.u_max, (alpha - a0) / spec.v_min)
            hi = _reach(spec, a0, spec.v_min, spec.u_min, (beta - a0) / spec.v_max)
            out[op] = (lo, hi) if lo < hi else None
    return BadSetVariant("shrunk", out)


def inflated_areas(model: IntersectionModel) -> BadSetVariant:
    """Super-intervals covering every position the upper-bound schedule may put a vehicle at."""
    static = outside_offsets(model)
    out: dict[Op, tuple[float, float] | None] = {}
    for spec in model.vehicles:
        route = model.route(spec.id)
        if not route:
            continue
        a0 = model.alpha(route[0])
        out[route[0]] = (a0, _reach(spec, a0, spec.v_max, spec.u_max, static[route[0]][1]))
        for op in route[1:]:
            t_entry, t_exit = static[op]
            out[op] = (
                _reach(spec, a0, spec.v_min, spec.u_min, t_entry),
                _reach(spec, a0, spec.v_max, spec.u_max, t_exit),
            )
    return BadSetVariant("inflated", out)
