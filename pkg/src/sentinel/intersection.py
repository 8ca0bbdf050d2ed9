"""Conflict-area geometry, the operation graph and bad-set predicates.

An *operation* ``(area, vehicle)`` is one vehicle crossing one conflict area.
Positions passed around this module are sequences aligned with
``model.vehicles``; operations refer to vehicles by their ``id``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from sentinel.dynamics import VehicleSpec

Op = tuple[int, int]  # (area id, vehicle id)


@dataclass(frozen=True)
class Placement:
    area: int
    vehicle: int
    alpha: float
    beta: float


@dataclass(frozen=True)
class IntersectionModel:
    """Vehicles plus the position interval each conflict area covers on each route."""

    vehicles: tuple[VehicleSpec, ...]
    placements: tuple[Placement, ...]
    _index: dict = field(init=False, repr=False, compare=False)
    _interval: dict = field(init=False, repr=False, compare=False)
    _routes: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "placements", tuple(self.placements))
        index = {}
        for k, spec in enumerate(self.vehicles):
            if spec.id in index:
                raise ValueError(f"duplicate vehicle id {spec.id}")
            index[spec.id] = k
        interval: dict[Op, tuple[float, float]] = {}
        for p in self.placements:
            if p.vehicle not in index:
                raise ValueError(f"placement on area {p.area} names unknown vehicle {p.vehicle}")
            if not p.alpha < p.beta:
                raise ValueError(f"placement ({p.area}, {p.vehicle}): alpha must be < beta")
            op = (p.area, p.vehicle)
            if op in interval:
                raise ValueError(f"duplicate placement {op}")
            interval[op] = (float(p.alpha), float(p.beta))
        routes: dict[int, tuple[Op, ...]] = {}
        for spec in self.vehicles:
            ops = sorted((op for op in interval if op[1] == spec.id), key=lambda o: interval[o][0])
            for o1, o2 in zip(ops, ops[1:]):
                if interval[o1][1] > interval[o2][0]:
                    raise ValueError(f"vehicle {spec.id}: areas {o1[0]} and {o2[0]} overlap on its route")
            routes[spec.id] = tuple(ops)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_interval", interval)
        object.__setattr__(self, "_routes", routes)

    @property
    def n(self) -> int:
        return len(self.vehicles)

    @property
    def area_ids(self) -> tuple[int, ...]:
        return tuple(sorted({p.area for p in self.placements}))

    def index_of(self, vehicle: int) -> int:
        return self._index[vehicle]

    def spec(self, vehicle: int) -> VehicleSpec:
        return self.vehicles[self._index[vehicle]]

    def interval(self, op: Op) -> tuple[float, float]:
        return self._interval[op]

    def alpha(self, op: Op) -> float:
        return self._interval[op][0]

    def beta(self, op: Op) -> float:
        return self._interval[op][1]

    def route(self, vehicle: int) -> tuple[Op, ...]:
        """Operations of ``vehicle`` in the order it meets them."""
        return self._routes[vehicle]

    def ops(self) -> tuple[Op, ...]:
        return tuple(sorted(self._interval))

    def route_end(self, vehicle: int) -> float:
        r = self._routes[vehicle]
        return self._interval[r[-1]][1] if r else -np.inf


def first_area_start(model: IntersectionModel, vehicle: int) -> float:
    """Entry position of the first conflict area on the route of ``vehicle``."""
    route = model.route(vehicle)
    if not route:
        raise ValueError(f"vehicle {vehicle} has no conflict areas on its route")
    return model.alpha(route[0])


def _shared_pairs(ops: Sequence[Op]) -> tuple[tuple[Op, Op], ...]:
    by_area: dict[int, list[Op]] = {}
    for op in sorted(ops):
        by_area.setdefault(op[0], []).append(op)
    pairs = []
    for area in sorted(by_area):
        group = by_area[area]
        for k, o1 in enumerate(group):
            for o2 in group[k + 1 :]:
                pairs.append((o1, o2))
    return tuple(pairs)


@dataclass(frozen=True)
class OperationGraph:
    all_ops: tuple[Op, ...]
    active_ops: tuple[Op, ...]
    first_ops: tuple[Op, ...]
    last_ops: tuple[Op, ...]
    conjunctive: tuple[tuple[Op, Op], ...]
    disjunctive: tuple[tuple[Op, Op], ...]
    all_pairs: tuple[tuple[Op, Op], ...]
    first_of: Mapping[int, Op]
    previous: Mapping[Op, Op]

    def is_first(self, op: Op) -> bool:
        return self.first_of.get(op[1]) == op


def build_operation_graph(model: IntersectionModel, x0: Sequence[float]) -> OperationGraph:
    """Operation sets and arcs for the positions ``x0`` (aligned with ``model.vehicles``)."""
    if len(x0) != model.n:
        raise ValueError(f"expected {model.n} positions, got {len(x0)}")
    all_ops = model.ops()
    first_of: dict[int, Op] = {}
    last: list[Op] = []
    conj: list[tuple[Op, Op]] = []
    previous: dict[Op, Op] = {}
    active: list[Op] = []
    for spec, x in zip(model.vehicles, x0):
        live = [op for op in model.route(spec.id) if x < model.beta(op)]
        if not live:
            continue
        active.extend(live)
        first_of[spec.id] = live[0]
        last.append(live[-1])
        for o1, o2 in zip(live, live[1:]):
            conj.append((o1, o2))
            previous[o2] = o1
    return OperationGraph(
        all_ops=all_ops,
        active_ops=tuple(sorted(active)),
        first_ops=tuple(sorted(first_of.values())),
        last_ops=tuple(sorted(last)),
        conjunctive=tuple(sorted(conj)),
        disjunctive=_shared_pairs(active),
        all_pairs=_shared_pairs(all_ops),
        first_of=first_of,
        previous=previous,
    )


@dataclass(frozen=True)
class BadSetVariant:
    """Per-operation open intervals; ``None`` marks an empty interval."""

    tag: str
    intervals: Mapping[Op, tuple[float, float] | None]

    def __post_init__(self) -> None:
        if self.tag not in ("nominal", "shrunk", "inflated"):
            raise ValueError(f"unknown bad-set variant {self.tag!r}")


def nominal_variant(model: IntersectionModel) -> BadSetVariant:
    return BadSetVariant("nominal", {op: model.interval(op) for op in model.ops()})


class BadSetMonitor:
    """Vectorised membership test for one variant over every shared-area pair."""

    def __init__(self, model: IntersectionModel, variant: BadSetVariant):
        self.variant = variant
        rows = []
        for o1, o2 in _shared_pairs(model.ops()):
            i1, i2 = variant.intervals.get(o1), variant.intervals.get(o2)
            if i1 is None or i2 is None:
                continue
            rows.append((model.index_of(o1[1]), i1[0], i1[1], model.index_of(o2[1]), i2[0], i2[1]))
        self.pairs = [(r[0], r[3]) for r in rows]
        arr = np.array(rows, dtype=float).reshape(-1, 6)
        self._j1 = arr[:, 0].astype(int)
        self._j2 = arr[:, 3].astype(int)
        self._lo1, self._hi1 = arr[:, 1], arr[:, 2]
        self._lo2, self._hi2 = arr[:, 4], arr[:, 5]

    def pair_mask(self, positions: np.ndarray) -> np.ndarray:
        """Boolean ``(samples, pairs)`` array; ``positions`` has shape ``(samples, n)``."""
        p = np.atleast_2d(np.asarray(positions, dtype=float))
        x1 = p[:, self._j1]
        x2 = p[:, self._j2]
        return (self._lo1 < x1) & (x1 < self._hi1) & (self._lo2 < x2) & (x2 < self._hi2)

    def inside(self, positions: np.ndarray) -> np.ndarray:
        """Per-sample membership for a ``(samples, n)`` array of positions."""
        return self.pair_mask(positions).any(axis=1)


def in_bad_set(model: IntersectionModel, variant: BadSetVariant, x: Sequence[float]) -> bool:
    """True when two vehicles sit strictly inside their intervals of one shared area."""
    for o1, o2 in _shared_pairs(model.ops()):
        i1, i2 = variant.intervals.get(o1), variant.intervals.get(o2)
        if i1 is None or i2 is None:
            continue
        x1 = x[model.index_of(o1[1])]
        x2 = x[model.index_of(o2[1])]
        if i1[0] < x1 < i1[1] and i2[0] < x2 < i2[1]:
            return True
    return False
