"""Least-restrictive supervisor.

Each step predicts where the desired inputs lead after one period, checks the
upper-bound problem there, and passes the desired inputs through when a
zero-lateness schedule exists.  Otherwise it replays the safe input stored on
the previous step, which by construction keeps a (time-shifted) schedule
feasible.  Safe inputs come from :func:`sigma`: brake then full throttle so
that each vehicle reaches its first area exactly at its scheduled time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from sentinel import _kernels as K
from sentinel import dynamics as dyn
from sentinel.dtp_solver import TOL
from sentinel.dynamics import PiecewiseConstantInput, VehicleState
from sentinel.intersection import IntersectionModel
from sentinel.verifier import UpperResult, solve_upper

log = logging.getLogger(__name__)

#: Tolerance for the shifted-schedule check on the override branch (s).
SHIFT_TOL = 1e-6


class SupervisorRefusal(RuntimeError):
    """The initial state admits no zero-lateness upper-bound schedule."""


class SupervisorInvariantError(RuntimeError):
    """The stored safe input failed re-verification (would contradict non-blocking)."""


def _switch_time(state: VehicleState, spec, target: float, arrival: float, ts_hi: float) -> float:
    return K.solve_switch(
        state.pos, state.speed, *spec.params, spec.u_min, spec.u_max, float(target), float(arrival), float(ts_hi)
    )


def _arrival(state: VehicleState, spec, target: float, ts: float) -> float:
    return K.two_phase_arrival(
        state.pos, state.speed, *spec.params, spec.u_min, spec.u_max, float(ts), float(target)
    )


def _target(model: IntersectionModel, upper: UpperResult, vid: int) -> tuple[float, float, float]:
    first = upper.graph.first_of[vid]
    return model.alpha(first), upper.params.release[first], upper.params.deadline[first]


def sigma(
    model: IntersectionModel, states: Sequence[VehicleState], upper: UpperResult
) -> tuple[PiecewiseConstantInput, ...]:
    """Safe joint signal on ``[0, inf)`` realising the zero-lateness schedule in ``upper``.

    Vehicles with no operation left get constant ``u_max``.
    """
    if upper.cost > TOL:
        raise ValueError("sigma needs a zero-lateness schedule")
    out = []
    for spec, state in zip(model.vehicles, states):
        vid = spec.id
        if vid not in upper.entry or upper.params.inside[vid]:
            out.append(PiecewiseConstantInput.constant(spec.u_max))
            continue
        target, r, d = _target(model, upper, vid)
        T = upper.entry[vid]
        if not (r - 1e-6 <= T <= d + 1e-6):
            raise ValueError(f"vehicle {vid}: scheduled entry {T} outside [{r}, {d}]")
        if T <= r:
            out.append(PiecewiseConstantInput.constant(spec.u_max))
            continue
        if T >= d:
            out.append(PiecewiseConstantInput((0.0, d), (spec.u_min, spec.u_max)))
            continue
        ts = _switch_time(state, spec, target, T, d)
        if ts <= 0.0:
            out.append(PiecewiseConstantInput.constant(spec.u_max))
        else:
            out.append(PiecewiseConstantInput((0.0, ts), (spec.u_min, spec.u_max)))
    return tuple(out)


def sigma_head(
    model: IntersectionModel, states: Sequence[VehicleState], upper: UpperResult, tau: float
) -> tuple[PiecewiseConstantInput, ...]:
    """:func:`sigma` restricted to ``[0, tau)``, skipping the bisection when the switch lies later."""
    out = []
    for spec, state in zip(model.vehicles, states):
        vid = spec.id
        if vid not in upper.entry or upper.params.inside[vid]:
            out.append(PiecewiseConstantInput.constant(spec.u_max))
            continue
        target, r, d = _target(model, upper, vid)
        T = upper.entry[vid]
        if T <= r:
            out.append(PiecewiseConstantInput.constant(spec.u_max))
        elif T >= d:
            if d < tau:
                out.append(PiecewiseConstantInput((0.0, d), (spec.u_min, spec.u_max)))
            else:
                out.append(PiecewiseConstantInput.constant(spec.u_min))
        elif _arrival(state, spec, target, tau) <= T:
            out.append(PiecewiseConstantInput.constant(spec.u_min))
        else:
            ts = _switch_time(state, spec, target, T, tau)
            if ts <= 0.0:
                out.append(PiecewiseConstantInput.constant(spec.u_max))
            else:
                out.append(PiecewiseConstantInput((0.0, ts), (spec.u_min, spec.u_max)))
    return tuple(out)


def predict(
    model: IntersectionModel, states: Sequence[VehicleState], signals: Sequence[PiecewiseConstantInput], tau: float
) -> list[VehicleState]:
    return [dyn.advance_signal(s, spec, sig, tau) for spec, s, sig in zip(model.vehicles, states, signals)]


@dataclass
class SupervisorStore:
    model: IntersectionModel
    tau: float
    mode: str = "feasibility"
    safe_signal: tuple[PiecewiseConstantInput, ...] = ()
    last_schedule: Mapping[int, float] = field(default_factory=dict)
    step_index: int = 0
    overrides: int = 0


@dataclass(frozen=True)
class StepOutcome:
    applied: tuple[PiecewiseConstantInput, ...]
    overridden: bool
    next_states: tuple[VehicleState, ...]
    upper: UpperResult


def initialize(
    model: IntersectionModel, states: Sequence[VehicleState], tau: float, mode: str = "feasibility"
) -> SupervisorStore:
    """Verify the initial state and store the first safe input; refuse on an unsafe start."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    upper = solve_upper(model, states, mode)
    if upper.cost > TOL:
        raise SupervisorRefusal("no zero-lateness schedule from the initial state")
    store = SupervisorStore(model, tau, mode)
    store.safe_signal = sigma_head(model, states, upper, tau)
    store.last_schedule = dict(upper.entry)
    return store


def _check_shift(store: SupervisorStore, upper: UpperResult) -> None:
    """The previous schedule moved by one period must remain a zero-lateness schedule."""
    params = upper.params
    shifted = {}
    for vid, first in upper.graph.first_of.items():
        if params.inside[vid] or vid not in store.last_schedule:
            shifted[vid] = params.release[first]
        else:
            shifted[vid] = store.last_schedule[vid] - store.tau
    prob = upper.problem
    vids = sorted(upper.graph.first_of)
    t = [shifted[v] for v in vids]
    worst = 0.0
    for v, c in prob.lower_bounds:
        worst = max(worst, c - t[v])
    for v, d in prob.due_dates:
        worst = max(worst, t[v] - d)
    for a, b in prob.disjunctions:
        va = max(t[w] + c - t[v] for v, w, c in a)
        vb = max(t[w] + c - t[v] for v, w, c in b)
        worst = max(worst, min(va, vb))
    if worst > SHIFT_TOL:
        raise SupervisorInvariantError(f"shifted schedule violated by {worst:.3g} s at step {store.step_index}")


def supervisor_step(
    store: SupervisorStore, states: Sequence[VehicleState], desired: Sequence[float]
) -> StepOutcome:
    """One period of the supervisor.  ``desired`` holds one constant input level per vehicle."""
    model, tau = store.model, store.tau
    if not store.safe_signal:
        raise RuntimeError("supervisor not initialised")
    wanted = tuple(PiecewiseConstantInput.constant(u) for u in desired)
    for spec, sig in zip(model.vehicles, wanted):
        sig.check_bounds(spec)
    nxt = predict(model, states, wanted, tau)
    upper = solve_upper(model, nxt, store.mode)
    applied, overridden = wanted, False
    if upper.cost > TOL:
        overridden = True
        # vehicles with nothing left to cross keep their desired input
        applied = tuple(
            safe if model.route(spec.id) and s.pos < model.route_end(spec.id) else want
            for spec, s, safe, want in zip(model.vehicles, states, store.safe_signal, wanted)
        )
        nxt = predict(model, states, applied, tau)
        upper = solve_upper(model, nxt, store.mode)
        if upper.cost > TOL:
            raise SupervisorInvariantError(f"stored safe input failed re-verification at step {store.step_index}")
        _check_shift(store, upper)
        store.overrides += 1
        log.info("step %d: override", store.step_index)
    store.safe_signal = sigma_head(model, nxt, upper, tau)
    store.last_schedule = dict(upper.entry)
    store.step_index += 1
    return StepOutcome(applied, overridden, tuple(nxt), upper)


def switch_arrival(state: VehicleState, spec, target: float, ts: float) -> float:
    """Arrival at ``target`` braking on ``[0, ts)`` then accelerating (used by tests)."""
    return _arrival(state, spec, target, ts)


__all__ = [
    "SupervisorInvariantError",
    "SupervisorRefusal",
    "SupervisorStore",
    "StepOutcome",
    "initialize",
    "predict",
    "sigma",
    "sigma_head",
    "supervisor_step",
    "switch_arrival",
]
