"""Longitudinal vehicle dynamics.

Each vehicle follows ``xdd = a*u + b*xd**2`` along its path, with the speed
saturated to ``[v_min, v_max]`` and the input bounded to ``[u_min, u_max]``.
The system is monotone in the input and the initial state, so the earliest and
latest arrival anywhere down the road come from holding ``u_max`` or ``u_min``
constant; :func:`min_time_to` and :func:`max_time_to` rely on that.

All functions are pure.  Integration is fixed-step RK4 (1 ms grid) with exact
handling of speed saturation, see :mod:`sentinel._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from sentinel import _kernels as K

#: Slack allowed when checking an input level against its bounds.
INPUT_SLACK = 1e-12


@dataclass(frozen=True)
class VehicleSpec:
    """Dynamics parameters of one vehicle.

    ``accel_gain`` and ``drag_coeff`` are ``a`` and ``b`` in
    ``xdd = a*u + b*xd**2``.
    """

    id: int
    v_min: float
    v_max: float
    u_min: float = -2.0
    u_max: float = 2.0
    accel_gain: float = 1.0
    drag_coeff: float = 0.005

    def __post_init__(self) -> None:
        if not self.u_min < self.u_max:
            raise ValueError(f"vehicle {self.id}: need u_min < u_max, got {self.u_min}, {self.u_max}")
        if not 0.0 < self.v_min <= self.v_max:
            raise ValueError(f"vehicle {self.id}: need 0 < v_min <= v_max, got {self.v_min}, {self.v_max}")
        if not self.accel_gain > 0.0:
            raise ValueError(f"vehicle {self.id}: accel_gain must be positive")
        if not self.drag_coeff >= 0.0:
            raise ValueError(f"vehicle {self.id}: drag_coeff must be non-negative")

    @property
    def params(self) -> tuple[float, float, float, float]:
        return (self.accel_gain, self.drag_coeff, self.v_min, self.v_max)

    def check_input(self, u: float) -> None:
        if not (self.u_min - INPUT_SLACK <= u <= self.u_max + INPUT_SLACK):
            raise ValueError(f"vehicle {self.id}: input {u} outside [{self.u_min}, {self.u_max}]")


@dataclass(frozen=True)
class VehicleState:
    pos: float
    speed: float


@dataclass(frozen=True)
class PiecewiseConstantInput:
    """Input signal holding ``values[k]`` from ``breakpoints[k]`` until the next breakpoint.

    Times are relative to the moment the signal starts being applied.  The last
    value is held forever.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        bps = tuple(float(t) for t in self.breakpoints)
        vals = tuple(float(u) for u in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if not bps or bps[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if len(bps) != len(vals):
            raise ValueError("breakpoints and values differ in length")
        if any(t1 <= t0 for t0, t1 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, u: float) -> PiecewiseConstantInput:
        return cls((0.0,), (u,))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> PiecewiseConstantInput:
        return cls(tuple(t for t, _ in pairs), tuple(u for _, u in pairs))

    def value_at(self, t: float) -> float:
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[max(k, 0)]

    def check_bounds(self, spec: VehicleSpec) -> None:
        for u in self.values:
            spec.check_input(u)

    def shifted(self, dt: float) -> PiecewiseConstantInput:
        """The same signal seen from ``dt`` seconds later."""
        if dt <= 0.0:
            return self
        pairs = [(0.0, self.value_at(dt))]
        pairs += [(t - dt, u) for t, u in zip(self.breakpoints, self.values) if t > dt]
        return PiecewiseConstantInput.from_pairs(pairs)

    def simplified(self) -> PiecewiseConstantInput:
        """Drop breakpoints that do not change the value."""
        pairs = [(self.breakpoints[0], self.values[0])]
        for t, u in zip(self.breakpoints[1:], self.values[1:]):
            if u != pairs[-1][1]:
                pairs.append((t, u))
        return PiecewiseConstantInput.from_pairs(pairs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.breakpoints, dtype=float), np.asarray(self.values, dtype=float)


class Trajectory(NamedTuple):
    times: np.ndarray
    pos: np.ndarray
    speed: np.ndarray

    def state(self, k: int) -> VehicleState:
        return VehicleState(float(self.pos[k]), float(self.speed[k]))


def _check_state(state: VehicleState, spec: VehicleSpec) -> None:
    if not (spec.v_min - 1e-9 <= state.speed <= spec.v_max + 1e-9):
        raise ValueError(
            f"vehicle {spec.id}: speed {state.speed} outside [{spec.v_min}, {spec.v_max}]"
        )


def _clamped(state: VehicleState, spec: VehicleSpec) -> tuple[float, float]:
    return state.pos, min(max(state.speed, spec.v_min), spec.v_max)


def step(state: VehicleState, spec: VehicleSpec, u: float, dt: float) -> VehicleState:
    """Integrate the dynamics for ``dt`` seconds under the constant input ``u``."""
    spec.check_input(u)
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_state(state, spec)
    x, v = _clamped(state, spec)
    x, v = K.advance(x, v, float(u), *spec.params, float(dt))
    return VehicleState(x, v)


def time_to_position(state: VehicleState, spec: VehicleSpec, u: float, target: float) -> float:
    """Time to reach ``target`` holding ``u``; 0 when already at or past it."""
    spec.check_input(u)
    _check_state(state, spec)
    x, v = _clamped(state, spec)
    return K.time_to(x, v, float(u), *spec.params, float(target))


def min_time_to(state: VehicleState, spec: VehicleSpec, target: float) -> float:
    """Earliest possible arrival at ``target`` over all admissible inputs."""
    return time_to_position(state, spec, spec.u_max, target)


def max_time_to(state: VehicleState, spec: VehicleSpec, target: float) -> float:
    """Latest possible arrival at ``target`` over all admissible inputs."""
    return time_to_position(state, spec, spec.u_min, target)


def position_after(state: VehicleState, spec: VehicleSpec, u: float, t: float) -> float:
    """Position after holding ``u`` for ``t`` seconds (``t >= 0``)."""
    if t <= 0.0:
        return state.pos
    return step(state, spec, u, t).pos


def advance_signal(
    state: VehicleState, spec: VehicleSpec, signal: PiecewiseConstantInput, duration: float
) -> VehicleState:
    """State after applying ``signal`` for ``duration`` seconds."""
    if duration <= 0.0:
        return state
    _check_state(state, spec)
    x, v = _clamped(state, spec)
    bps, vals = signal.arrays()
    x, v = K.advance_signal(x, v, *spec.params, bps, vals, float(duration))
    return VehicleState(x, v)


def simulate_signal(
    state: VehicleState,
    spec: VehicleSpec,
    signal: PiecewiseConstantInput,
    horizon: float,
    dt: float,
) -> Trajectory:
    """Sample the trajectory under ``signal`` at multiples of ``dt`` up to ``horizon``.

    Integration restarts on every sample and every breakpoint of the signal.
    """
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    signal.check_bounds(spec)
    _check_state(state, spec)
    n = int(math.floor(horizon / dt + 1e-9))
    x, v = _clamped(state, spec)
    bps, vals = signal.arrays()
    xs, vs = K.simulate(x, v, *spec.params, bps, vals, n, float(dt))
    return Trajectory(np.arange(n + 1) * dt, xs, vs)


def crossing_times(
    state: VehicleState, spec: VehicleSpec, signal: PiecewiseConstantInput, targets: Sequence[float]
) -> np.ndarray:
    """First times the position reaches each of ``targets`` (ascending) under ``signal``."""
    x, v = _clamped(state, spec)
    bps, vals = signal.arrays()
    return K.crossing_times(x, v, *spec.params, bps, vals, np.asarray(targets, dtype=float))
