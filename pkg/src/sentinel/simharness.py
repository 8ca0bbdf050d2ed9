"""Scenario files, open/closed-loop simulation, bad-set monitoring and CSV logs.

Scenario JSON layout::

    {
      "name": "fig3",
      "vehicles": [{"id": 1, "x0": 0.0, "v0": 10.0, "v_min": 8.0, "v_max": 10.0,
                    "u_min": -2.0, "u_max": 2.0, "a": 1.0, "b": 0.005}, ...],
      "areas": [{"id": 1}, ...],
      "placements": [{"area": 1, "vehicle": 1, "alpha": 20.0, "beta": 25.0}, ...],
      "sim": {"tau": 0.1, "steps": 60,
              "desired": {"1": -2.0, "2": [[0.0, -2.0], [1.5, 2.0]], ...}}
    }

``desired`` maps each vehicle id to a constant level or a ``[time, level]``
table (held from each time until the next).  The supervisor sees the table
value at the start of every period.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from sentinel import dynamics as dyn
from sentinel.dynamics import PiecewiseConstantInput, VehicleSpec, VehicleState
from sentinel.intersection import BadSetMonitor, IntersectionModel, Placement, nominal_variant
from sentinel.schedparams import inflated_areas, shrunk_areas
from sentinel.supervisor import initialize, predict, supervisor_step
from sentinel.verifier import solve_lower, solve_upper

#: Sub-sampling period of the bad-set monitor (s).
SUBSAMPLE = 1e-3

CSV_COLUMNS = (
    "step",
    "time",
    "vehicle",
    "pos",
    "speed",
    "u_applied",
    "overridden",
    "s_lower",
    "s_upper",
    "in_bad",
    "in_shrunk",
    "in_inflated",
)


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending line or field."""


@dataclass(frozen=True)
class Scenario:
    model: IntersectionModel
    initial: tuple[VehicleState, ...]
    tau: float
    steps: int
    desired: tuple[PiecewiseConstantInput, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial", tuple(self.initial))
        object.__setattr__(self, "desired", tuple(self.desired))
        if not self.tau > 0:
            raise ScenarioError(f"sim.tau must be positive, got {self.tau}")
        if self.steps < 0:
            raise ScenarioError(f"sim.steps must be non-negative, got {self.steps}")
        if len(self.initial) != self.model.n or len(self.desired) != self.model.n:
            raise ScenarioError("one initial state and one desired profile per vehicle expected")
        for spec, s, sig in zip(self.model.vehicles, self.initial, self.desired):
            if not spec.v_min <= s.speed <= spec.v_max:
                raise ScenarioError(f"vehicle {spec.id}: v0 {s.speed} outside [{spec.v_min}, {spec.v_max}]")
            try:
                sig.check_bounds(spec)
            except ValueError as exc:
                raise ScenarioError(f"sim.desired.{spec.id}: {exc}") from None

    def desired_at(self, t: float) -> list[float]:
        return [sig.value_at(t) for sig in self.desired]

    def with_initial(self, initial: Sequence[VehicleState]) -> Scenario:
        return Scenario(self.model, tuple(initial), self.tau, self.steps, self.desired, self.name)


# ----------------------------------------------------------------------------
# JSON


def _get(obj: Any, key: str, path: str, kind: type | tuple = (int, float)) -> Any:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    if key not in obj:
        raise ScenarioError(f"missing required field '{path}.{key}'" if path else f"missing required field '{key}'")
    val = obj[key]
    if kind is float or kind == (int, float):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ScenarioError(f"field '{path}.{key}' must be a number")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ScenarioError(f"field '{path}.{key}' must be an integer")
        return val
    if not isinstance(val, kind):
        raise ScenarioError(f"field '{path}.{key}' has the wrong type")
    return val


def _profile(raw: Any, path: str) -> PiecewiseConstantInput:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return PiecewiseConstantInput.constant(float(raw))
    if isinstance(raw, list) and raw:
        try:
            pairs = [(float(t), float(u)) for t, u in raw]
            return PiecewiseConstantInput.from_pairs(pairs)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"field '{path}': {exc}") from None
    raise ScenarioError(f"field '{path}' must be a number or a non-empty [[time, value], ...] table")


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("top level must be a JSON object")
    vehicles = _get(doc, "vehicles", "", list)
    specs, initial = [], []
    for k, v in enumerate(vehicles):
        path = f"vehicles[{k}]"
        vid = _get(v, "id", path, int)
        try:
            spec = VehicleSpec(
                id=vid,
                v_min=_get(v, "v_min", path),
                v_max=_get(v, "v_max", path),
                u_min=_get(v, "u_min", path),
                u_max=_get(v, "u_max", path),
                accel_gain=_get(v, "a", path),
                drag_coeff=_get(v, "b", path),
            )
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
        specs.append(spec)
        initial.append(VehicleState(_get(v, "x0", path), _get(v, "v0", path)))
    area_ids = set()
    for k, a in enumerate(_get(doc, "areas", "", list)):
        area_ids.add(_get(a, "id", f"areas[{k}]", int))
    placements = []
    for k, p in enumerate(_get(doc, "placements", "", list)):
        path = f"placements[{k}]"
        area = _get(p, "area", path, int)
        if area not in area_ids:
            raise ScenarioError(f"field '{path}.area': unknown area {area}")
        placements.append(Placement(area, _get(p, "vehicle", path, int), _get(p, "alpha", path), _get(p, "beta", path)))
    try:
        model = IntersectionModel(tuple(specs), tuple(placements))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    used = {p.area for p in placements}
    if area_ids - used:
        raise ScenarioError(f"areas {sorted(area_ids - used)} appear on no route")
    sim = _get(doc, "sim", "", dict)
    desired_raw = _get(sim, "desired", "sim", dict)
    desired = []
    for spec in specs:
        key = str(spec.id)
        if key not in desired_raw:
            raise ScenarioError(f"missing required field 'sim.desired.{key}'")
        desired.append(_profile(desired_raw[key], f"sim.desired.{key}"))
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("field 'name' must be a string")
    return Scenario(
        model,
        tuple(initial),
        _get(sim, "tau", "sim"),
        _get(sim, "steps", "sim", int),
        tuple(desired),
        name,
    )


def scenario_to_dict(s: Scenario) -> dict:
    vehicles = [
        {
            "id": spec.id,
            "x0": st.pos,
            "v0": st.speed,
            "v_min": spec.v_min,
            "v_max": spec.v_max,
            "u_min": spec.u_min,
            "u_max": spec.u_max,
            "a": spec.accel_gain,
            "b": spec.drag_coeff,
        }
        for spec, st in zip(s.model.vehicles, s.initial)
    ]
    desired = {}
    for spec, sig in zip(s.model.vehicles, s.desired):
        if len(sig.values) == 1:
            desired[str(spec.id)] = sig.values[0]
        else:
            desired[str(spec.id)] = [[t, u] for t, u in zip(sig.breakpoints, sig.values)]
    doc = {
        "name": s.name,
        "vehicles": vehicles,
        "areas": [{"id": a} for a in s.model.area_ids],
        "placements": [
            {"area": p.area, "vehicle": p.vehicle, "alpha": p.alpha, "beta": p.beta} for p in s.model.placements
        ],
        "sim": {"tau": s.tau, "steps": s.steps, "desired": desired},
    }
    return doc


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return loads_scenario(text)


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_scenario(s: Scenario, path: str | os.PathLike) -> None:
    atomic_write(path, dumps_scenario(s))


# ----------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class LogRow:
    step: int
    time: float
    vehicle: int
    pos: float
    speed: float
    u_applied: float
    overridden: bool
    s_lower: float
    s_upper: float
    in_bad: bool
    in_shrunk: bool
    in_inflated: bool


@dataclass
class TrajectoryLog:
    rows: list[LogRow] = field(default_factory=list)
    fine_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fine_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    step_seconds: list[float] = field(default_factory=list)
    override_steps: list[int] = field(default_factory=list)
    applied: list[tuple[float, ...]] = field(default_factory=list)

    @property
    def overrides(self) -> int:
        return len(self.override_steps)

    def flag_count(self, column: str) -> int:
        return sum(1 for r in self.rows if getattr(r, column))

    def step_flags(self, column: str) -> list[bool]:
        steps = sorted({r.step for r in self.rows})
        return [any(getattr(r, column) for r in self.rows if r.step == k) for k in steps]


def _fmt(x: float) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".9g")


def log_to_csv(log: TrajectoryLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in log.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_log(log: TrajectoryLog, path: str | os.PathLike) -> None:
    atomic_write(path, log_to_csv(log))


class _Monitors:
    def __init__(self, model: IntersectionModel):
        self.nominal = BadSetMonitor(model, nominal_variant(model))
        self.shrunk = BadSetMonitor(model, shrunk_areas(model))
        self.inflated = BadSetMonitor(model, inflated_areas(model))


def _fine_segment(
    model: IntersectionModel, states: Sequence[VehicleState], signals: Sequence[PiecewiseConstantInput], tau: float, dt: float
) -> np.ndarray:
    """Positions at ``0, dt, ...`` strictly before ``tau``; shape ``(samples, n)``."""
    cols = []
    for spec, s, sig in zip(model.vehicles, states, signals):
        cols.append(dyn.simulate_signal(s, spec, sig, tau, dt).pos)
    arr = np.stack(cols, axis=1)
    n_keep = int(math.ceil(tau / dt - 1e-9))
    return arr[:n_keep]


def _bounds(model, states, mode: str) -> tuple[float, float]:
    if mode == "off":
        return math.nan, math.nan
    upper = solve_upper(model, states, mode).cost
    lower = solve_lower(model, states, mode).cost
    return lower, upper


def _run(
    scenario: Scenario,
    supervised: bool,
    bounds_mode: str,
    subsample: float,
    supervisor_mode: str = "feasibility",
) -> TrajectoryLog:
    model, tau = scenario.model, scenario.tau
    mon = _Monitors(model)
    log = TrajectoryLog()
    states = list(scenario.initial)
    store = initialize(model, states, tau, supervisor_mode) if supervised else None
    fine_t, fine_x = [], []
    for k in range(scenario.steps):
        t0 = k * tau
        desired = scenario.desired_at(t0)
        if store is not None:
            tic = time.perf_counter()
            outcome = supervisor_step(store, states, desired)
            log.step_seconds.append(time.perf_counter() - tic)
            applied = outcome.applied
            overridden = outcome.overridden
            nxt = list(outcome.next_states)
        else:
            applied = tuple(PiecewiseConstantInput.constant(u) for u in desired)
            overridden = False
            nxt = predict(model, states, applied, tau)
        if overridden:
            log.override_steps.append(k)
        seg = _fine_segment(model, states, applied, tau, subsample)
        fine_t.append(t0 + np.arange(seg.shape[0]) * subsample)
        fine_x.append(seg)
        flags = (mon.nominal.inside(seg).any(), mon.shrunk.inside(seg).any(), mon.inflated.inside(seg).any())
        s_lower, s_upper = _bounds(model, states, bounds_mode)
        u0 = tuple(sig.value_at(0.0) for sig in applied)
        log.applied.append(u0)
        for spec, s, u in zip(model.vehicles, states, u0):
            log.rows.append(
                LogRow(k, t0, spec.id, s.pos, s.speed, u, overridden, s_lower, s_upper, *map(bool, flags))
            )
        states = nxt
    if fine_x:
        log.fine_times = np.concatenate(fine_t)
        log.fine_pos = np.concatenate(fine_x, axis=0)
    else:
        log.fine_pos = np.zeros((0, model.n))
    return log


def run_open_loop(scenario: Scenario, bounds_mode: str = "exact", subsample: float = SUBSAMPLE) -> TrajectoryLog:
    """Apply the desired inputs unsupervised, logging both bounds and bad-set flags each step."""
    return _run(scenario, False, bounds_mode, subsample)


def run_closed_loop(
    scenario: Scenario,
    bounds_mode: str = "exact",
    subsample: float = SUBSAMPLE,
    supervisor_mode: str = "feasibility",
) -> TrajectoryLog:
    """Drive the supervisor every period.  Raises SupervisorRefusal on an unsafe start."""
    return _run(scenario, True, bounds_mode, subsample, supervisor_mode)


def occupancy_intervals(
    model: IntersectionModel, times: np.ndarray, positions: np.ndarray
) -> dict[int, list[tuple[int, float, float]]]:
    """Per area: ``(vehicle, first, last)`` sample times at which the vehicle is strictly inside."""
    out: dict[int, list[tuple[int, float, float]]] = {}
    for op in model.ops():
        lo, hi = model.interval(op)
        x = positions[:, model.index_of(op[1])]
        inside = np.flatnonzero((x > lo) & (x < hi))
        if inside.size:
            out.setdefault(op[0], []).append((op[1], float(times[inside[0]]), float(times[inside[-1]])))
    return out


def fixture_path(name: str) -> Path:
    """Path of a bundled scenario (``fig3``, ``fig1``, ``single``, ``forced_overlap``)."""
    return Path(__file__).parent / "data" / f"{name}.json"


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_path(name))
