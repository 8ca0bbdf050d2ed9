"""Acceptance criteria, one test each.  Every test reports a PASS/FAIL line."""

from __future__ import annotations

import math
import random
import time

import numpy as np

from acceptance_log import report
from oracles import random_dtp_parts, reference_samples
from sentinel import dynamics as dyn
from sentinel.cli import BUDGET, bench_latencies
from sentinel.dtp_solver import DisjunctiveTemporalProblem, enumerate_exact, min_max_lateness
from sentinel.dynamics import PiecewiseConstantInput, VehicleSpec, VehicleState
from sentinel.intersection import BadSetMonitor, nominal_variant
from sentinel.scenarios import fig3_scenario, random_small_scenario
from sentinel.schedparams import inflated_areas, shrunk_areas
from sentinel.simharness import occupancy_intervals, run_closed_loop
from sentinel.supervisor import SupervisorInvariantError, initialize, sigma, supervisor_step
from sentinel.verifier import InconsistentBounds, default_horizon, oracle_search, solve_lower, solve_upper, verify

# override steps of the supervised three-vehicle run (derived from this implementation, frozen)
FIG3_OVERRIDE_STEPS = [8, 9, 10, 11, 12, 13, 14, 16, 17, 18, 19, 20, 21]


def test_criterion_1_bound_ordering():
    tic = time.perf_counter()
    rng = random.Random(1)
    calls = violations = 0
    for _ in range(500):
        sc = random_small_scenario(rng)
        states = list(sc.initial)
        for _ in range(3):
            try:
                v = verify(sc.model, states)
                if v.s_upper == 0.0 and v.s_lower != 0.0:
                    violations += 1
            except InconsistentBounds:
                violations += 1
            calls += 1
            states = [dyn.advance_signal(s, spec, sig, 1.0) for s, spec, sig in zip(states, sc.model.vehicles, sc.desired)]
    wall = time.perf_counter() - tic
    ok = violations == 0 and wall < 120
    report(1, ok, f"500 scenarios, {calls} verifier calls, {violations} violations, {wall:.1f} s")
    assert ok


def test_criterion_2_solver_exactness():
    tic = time.perf_counter()
    mismatches = 0
    nonzero = 0
    for seed in range(1000):
        rng = random.Random(seed)
        n = rng.randint(2, 8)
        lbs, diffs, dis, due, soft = random_dtp_parts(
            rng, n, rng.randint(0, n), rng.randint(1, 8), rng.randint(1, n), 2 if seed % 4 == 0 else 0
        )
        p = DisjunctiveTemporalProblem(n, lbs, diffs, dis, due, soft)
        a, b = min_max_lateness(p), enumerate_exact(p)
        if math.isinf(a.cost) or math.isinf(b.cost):
            same = math.isinf(a.cost) and math.isinf(b.cost)
        else:
            same = abs(a.cost - b.cost) <= 1e-9 and (a.cost == 0.0) == (b.cost == 0.0)
        mismatches += not same
        nonzero += b.cost > 0
    wall = time.perf_counter() - tic
    ok = mismatches == 0 and wall < 60
    report(2, ok, f"1000 instances ({nonzero} with positive cost), {mismatches} mismatches, {wall:.1f} s")
    assert ok


def test_criterion_3_oracle_bracketing():
    tic = time.perf_counter()
    rng = random.Random(20240301)
    viol_a = viol_b = 0
    lower_zero = shrunk_found = 0
    misses = []
    for i in range(100):
        sc = random_small_scenario(rng, n_vehicles=(2,))
        m, s = sc.model, sc.initial
        lower = solve_lower(m, s).cost
        upper = solve_upper(m, s).cost
        if oracle_search(m, s) is not None and lower > 0:
            viol_a += 1
        if oracle_search(m, s, variant=inflated_areas(m)) is not None and upper > 0:
            viol_b += 1
        if lower == 0.0:
            lower_zero += 1
            if oracle_search(m, s, variant=shrunk_areas(m)) is not None:
                shrunk_found += 1
            else:
                misses.append(i)
    wall = time.perf_counter() - tic
    rate = shrunk_found / lower_zero if lower_zero else 1.0
    ok = viol_a == 0 and viol_b == 0 and rate >= 0.95 and wall < 600
    report(
        3, ok,
        f"(a) {viol_a} violations, (b) {viol_b} violations, "
        f"(c) shrunk-safe found {shrunk_found}/{lower_zero} = {rate:.1%}, misses {misses}, {wall:.0f} s",
    )
    assert ok


def test_criterion_4_sigma_is_safe():
    rng = random.Random(2)
    checked = violations = 0
    while checked < 100:
        sc = random_small_scenario(rng)
        m, s = sc.model, sc.initial
        up = solve_upper(m, s)
        if up.cost > 0:
            continue
        sigs = sigma(m, s, up)
        horizon = default_horizon(m, s) + 1.0
        pos = np.column_stack(
            [dyn.simulate_signal(st, spec, sig, horizon, 1e-3).pos for st, spec, sig in zip(s, m.vehicles, sigs)]
        )
        # every vehicle must have cleared its route by the end of the horizon
        assert all(pos[-1, k] >= m.route_end(spec.id) for k, spec in enumerate(m.vehicles))
        violations += bool(BadSetMonitor(m, nominal_variant(m)).inside(pos).any())
        checked += 1
    ok = violations == 0
    report(4, ok, f"{checked} zero-cost states, {violations} bad-set entries along the constructed signal")
    assert ok


def test_criterion_5_three_vehicle_supervised():
    log = run_closed_loop(fig3_scenario())
    bad = log.flag_count("in_bad")
    shrunk = log.flag_count("in_shrunk")
    inflated = int(BadSetMonitor(fig3_scenario().model, inflated_areas(fig3_scenario().model)).inside(log.fine_pos).sum())
    nominal_fine = int(BadSetMonitor(fig3_scenario().model, nominal_variant(fig3_scenario().model)).inside(log.fine_pos).sum())
    ok = log.overrides >= 1 and bad == 0 and nominal_fine == 0 and shrunk == 0 and inflated >= 1
    ok = ok and log.override_steps == FIG3_OVERRIDE_STEPS
    report(
        5, ok,
        f"overrides at steps {log.override_steps}, nominal entries {bad} (fine samples {nominal_fine}), "
        f"shrunk {shrunk}, inflated samples {inflated}",
    )
    assert ok


def test_criterion_6_twenty_vehicle_occupancy(fig1):
    log = run_closed_loop(fig1, bounds_mode="off")
    occ = occupancy_intervals(fig1.model, log.fine_times, log.fine_pos)
    overlaps = 0
    shared = 0
    for area, spans in occ.items():
        if len(spans) < 2:
            continue
        shared += 1
        for k, (j1, a1, b1) in enumerate(spans):
            for j2, a2, b2 in spans[k + 1 :]:
                if not (b1 < a2 or b2 < a1):
                    overlaps += 1
    done = all(log.fine_pos[-1, k] >= fig1.model.route_end(spec.id) for k, spec in enumerate(fig1.model.vehicles))
    ok = overlaps == 0 and log.flag_count("in_bad") == 0 and done
    report(6, ok, f"{shared} shared areas crossed, {overlaps} overlapping occupancies, all routes completed: {done}")
    assert ok


def test_criterion_7_latency(fig1):
    lat = bench_latencies(fig1, fig1.steps, "feasibility", seed=None)
    p50, p95, mx = np.median(lat), np.percentile(lat, 95), lat.max()
    ok = mx <= BUDGET
    report(7, ok, f"p50 {p50 * 1e3:.1f} ms, p95 {p95 * 1e3:.1f} ms, max {mx * 1e3:.1f} ms over {len(lat)} steps")
    assert ok


def test_criterion_8_non_blocking_soak():
    rng = random.Random(3)
    sc = fig3_scenario()
    steps = episodes = overrides = failures = 0
    while steps < 1000:
        store = initialize(sc.model, sc.initial, sc.tau)
        states = list(sc.initial)
        episodes += 1
        # replay from the start whenever everyone has cleared the intersection
        while steps < 1000 and any(s.pos < sc.model.route_end(v.id) for s, v in zip(states, sc.model.vehicles)):
            desired = [rng.choice([-2.0, 2.0, rng.uniform(-2.0, 2.0)]) for _ in range(3)]
            try:
                out = supervisor_step(store, states, desired)
            except SupervisorInvariantError:
                failures += 1
                break
            if not out.applied or len(out.applied) != 3:
                failures += 1
            overrides += out.overridden
            states = list(out.next_states)
            steps += 1
    ok = failures == 0
    report(8, ok, f"{steps} steps over {episodes} episodes, {overrides} overrides, {failures} failures")
    assert ok


def test_criterion_9_dynamics():
    worst = 0.0
    rng = random.Random(9)
    specs = [VehicleSpec(1, 8.0, 10.0), VehicleSpec(1, 1.0, 15.0)]
    for case in range(6):
        spec = specs[case % 2]
        bps = [0.0] + sorted(round(rng.uniform(0.1, 4.9), 3) for _ in range(3))
        vals = [rng.uniform(-2, 2) for _ in bps]
        v0 = rng.uniform(spec.v_min, spec.v_max)
        sig = PiecewiseConstantInput(tuple(bps), tuple(vals))
        tr = dyn.simulate_signal(VehicleState(0.0, v0), spec, sig, 5.0, 0.1)
        ref_x, _ = reference_samples(0.0, v0, bps, vals, 1.0, 0.005, spec.v_min, spec.v_max, 5.0, 0.1)
        worst = max(worst, float(np.abs(tr.pos - ref_x).max()))

    gen = np.random.default_rng(99)
    wide = VehicleSpec(1, 1.0, 15.0)
    broken = 0
    for _ in range(10_000):
        k = int(gen.integers(1, 5))
        bps = tuple(float(t) for t in np.concatenate([[0.0], np.sort(gen.uniform(0.01, 4.0, k - 1))]))
        if len(set(bps)) != len(bps):
            continue
        a, b = gen.uniform(-2, 2, k), gen.uniform(-2, 2, k)
        lo = PiecewiseConstantInput(bps, tuple(np.minimum(a, b)))
        hi = PiecewiseConstantInput(bps, tuple(np.maximum(a, b)))
        x0 = gen.uniform(0, 10)
        v0 = gen.uniform(1, 15)
        t = gen.uniform(0, 4)
        s1 = dyn.advance_signal(VehicleState(x0, v0), wide, lo, t)
        s2 = dyn.advance_signal(
            VehicleState(x0 + gen.uniform(0, 2), min(v0 + gen.uniform(0, 3), 15.0)), wide, hi, t + gen.uniform(0, 0.5)
        )
        broken += s1.pos > s2.pos + 1e-9
    ok = worst <= 1e-6 and broken == 0
    report(9, ok, f"max deviation from reference {worst:.2e} m over 5 s, monotonicity: {broken}/10000 violations")
    assert ok
