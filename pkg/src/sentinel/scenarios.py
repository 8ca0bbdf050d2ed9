"""Builders for the bundled scenarios and for randomized small instances.

Geometry of the bundled scenarios: every route's first area starts at 20 m,
areas are 5 m long and start every 6 m along a route.
"""

from __future__ import annotations

import random
from typing import Sequence

from sentinel.dynamics import PiecewiseConstantInput, VehicleSpec, VehicleState
from sentinel.intersection import IntersectionModel, Placement
from sentinel.simharness import Scenario

FIRST_ALPHA = 20.0
AREA_LENGTH = 5.0
AREA_SPACING = 6.0
DRAG = 0.005
TAU = 0.1


def routes_model(
    routes: dict[int, Sequence[int]], v_min: float, v_max: float, drag: float = DRAG
) -> IntersectionModel:
    """Model where vehicle ``j`` meets ``routes[j]`` in order on the standard grid."""
    specs = tuple(VehicleSpec(j, v_min, v_max, drag_coeff=drag) for j in sorted(routes))
    placements = []
    for j in sorted(routes):
        for k, area in enumerate(routes[j]):
            alpha = FIRST_ALPHA + AREA_SPACING * k
            placements.append(Placement(area, j, alpha, alpha + AREA_LENGTH))
    return IntersectionModel(specs, tuple(placements))


def _constant(levels: Sequence[float]) -> tuple[PiecewiseConstantInput, ...]:
    return tuple(PiecewiseConstantInput.constant(u) for u in levels)


def fig3_scenario(steps: int = 60) -> Scenario:
    """Three vehicles on a cycle of three areas; two brake and one accelerates."""
    model = routes_model({1: (1, 3), 2: (2, 1), 3: (3, 2)}, 8.0, 10.0)
    initial = (VehicleState(0.0, 10.0), VehicleState(0.0, 8.0), VehicleState(0.0, 8.0))
    return Scenario(model, initial, TAU, steps, _constant((-2.0, -2.0, 2.0)), "fig3")


def single_vehicle_scenario(steps: int = 40) -> Scenario:
    model = routes_model({1: (1, 2)}, 8.0, 10.0)
    return Scenario(model, (VehicleState(0.0, 9.0),), TAU, steps, _constant((2.0,)), "single")


def forced_overlap_scenario(steps: int = 10) -> Scenario:
    """Two vehicles already strictly inside the same area: unsafe whatever they do."""
    model = routes_model({1: (1,), 2: (1,)}, 8.0, 10.0)
    initial = (VehicleState(21.0, 9.0), VehicleState(22.0, 9.0))
    return Scenario(model, initial, TAU, steps, _constant((2.0, 2.0)), "forced_overlap")


def head_on_scenario(steps: int = 60, gap: float = 0.0) -> Scenario:
    """Two vehicles reaching one shared area at the same time; open loop collides."""
    model = routes_model({1: (1,), 2: (1,)}, 8.0, 10.0)
    initial = (VehicleState(0.0, 10.0), VehicleState(-gap, 10.0))
    return Scenario(model, initial, TAU, steps, _constant((2.0, 2.0)), "head_on")


FIG1_X0 = (0, -2, 5, -5, 0, 5, 0, 1, 5, 4, 0, -2, 5, 5, 0, 5, -2, 0, -2, 0)
FIG1_SEED = 7


def fig1_incidence(seed: int, n: int = 20, triples: int = 24, pairs: int = 24, per_vehicle: int = 6):
    """Random area/vehicle incidence where two vehicles share at most one area.

    Returns ``{vehicle: [area, ...]}`` with areas in route order.
    """
    rng = random.Random(seed)
    for _attempt in range(10_000):
        cap = {j: per_vehicle for j in range(1, n + 1)}
        met: set[tuple[int, int]] = set()
        members: list[list[int]] = []
        ok = True
        for size in [3] * triples + [2] * pairs:
            pool = [j for j in cap if cap[j] > 0]
            rng.shuffle(pool)
            pool.sort(key=lambda j: -cap[j])
            group: list[int] = []
            for j in pool:
                if all((min(j, g), max(j, g)) not in met for g in group):
                    group.append(j)
                    if len(group) == size:
                        break
            if len(group) < size:
                ok = False
                break
            for j in group:
                cap[j] -= 1
            for a in group:
                for b in group:
                    if a < b:
                        met.add((a, b))
            members.append(group)
        if not ok:
            continue
        routes: dict[int, list[int]] = {j: [] for j in range(1, n + 1)}
        for area, group in enumerate(members, start=1):
            for j in group:
                routes[j].append(area)
        for j in routes:
            rng.shuffle(routes[j])
        return routes
    raise RuntimeError("could not build an incidence structure")


def fig1_scenario(seed: int = FIG1_SEED, steps: int = 180) -> Scenario:
    """Twenty vehicles, 48 areas (24 shared by three vehicles, 24 by two), six areas per route."""
    routes = fig1_incidence(seed)
    model = routes_model(routes, 1.0, 10.0)
    initial = tuple(VehicleState(float(x), 5.0) for x in FIG1_X0)
    return Scenario(model, initial, TAU, steps, _constant([2.0] * 20), "fig1")


# ----------------------------------------------------------------------------
# randomized small instances


def random_small_scenario(
    rng: random.Random,
    n_vehicles: Sequence[int] = (2, 3),
    n_areas: Sequence[int] = (1, 2, 3),
    max_ops: int = 6,
) -> Scenario:
    """2-3 vehicles and 1-3 shared areas with random geometry, speeds and initial states."""
    while True:
        n = rng.choice(list(n_vehicles))
        m = rng.choice(list(n_areas))
        members = {a: rng.sample(range(1, n + 1), rng.randint(2, n)) for a in range(1, m + 1)}
        routes: dict[int, list[int]] = {j: [] for j in range(1, n + 1)}
        for a, group in members.items():
            for j in group:
                routes[j].append(a)
        if sum(len(r) for r in routes.values()) > max_ops or any(not r for r in routes.values()):
            continue
        specs, placements, initial = [], [], []
        for j in range(1, n + 1):
            v_min = rng.uniform(2.0, 8.0)
            v_max = v_min + rng.uniform(0.5, 6.0)
            specs.append(VehicleSpec(j, v_min, v_max, drag_coeff=DRAG))
            order = routes[j][:]
            rng.shuffle(order)
            alpha = rng.uniform(15.0, 25.0)
            for a in order:
                length = rng.uniform(3.0, 6.0)
                placements.append(Placement(a, j, alpha, alpha + length))
                alpha += length + rng.uniform(0.5, 3.0)
            first = min(p.alpha for p in placements if p.vehicle == j)
            x0 = first - rng.uniform(-4.0, 20.0)
            initial.append(VehicleState(x0, rng.uniform(v_min, v_max)))
        model = IntersectionModel(tuple(specs), tuple(placements))
        levels = [rng.choice([-2.0, 0.0, 2.0]) for _ in range(n)]
        return Scenario(model, tuple(initial), TAU, 40, _constant(levels), "random")
