from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import const_accel_state, const_accel_time_to, reference_samples, reference_time_to
from sentinel import dynamics as dyn
from sentinel.dynamics import PiecewiseConstantInput, VehicleSpec, VehicleState

SPEC = VehicleSpec(1, 8.0, 10.0)
NO_DRAG = VehicleSpec(1, 8.0, 10.0, drag_coeff=0.0)
WIDE = VehicleSpec(1, 1.0, 15.0)


# ---------------------------------------------------------------- examples


def test_constant_speed_without_drag():
    out = dyn.step(VehicleState(0.0, 10.0), VehicleSpec(1, 8.0, 10.0, drag_coeff=0.0), 0.0, 2.0)
    assert out.pos == pytest.approx(20.0, abs=1e-12)
    assert out.speed == 10.0


def test_saturated_cruise_with_drag():
    out = dyn.step(VehicleState(0.0, 10.0), SPEC, 2.0, 2.0)
    assert out.pos == pytest.approx(20.0, abs=1e-12)
    assert out.speed == 10.0


def test_step_matches_golden(dynamics_golden):
    g = dynamics_golden["step_x0_v8_u2_dt05"]
    out = dyn.step(VehicleState(0.0, 8.0), SPEC, 2.0, 0.5)
    assert out.pos == pytest.approx(g["pos"], abs=1e-9)
    assert out.speed == pytest.approx(g["speed"], abs=1e-9)


def test_step_rejects_bad_arguments():
    with pytest.raises(ValueError):
        dyn.step(VehicleState(0.0, 9.0), SPEC, 2.5, 0.1)
    with pytest.raises(ValueError):
        dyn.step(VehicleState(0.0, 9.0), SPEC, 1.0, 0.0)
    with pytest.raises(ValueError):
        dyn.step(VehicleState(0.0, 9.0), SPEC, 1.0, -1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        VehicleSpec(1, 0.0, 10.0)
    with pytest.raises(ValueError):
        VehicleSpec(1, 11.0, 10.0)
    with pytest.raises(ValueError):
        VehicleSpec(1, 8.0, 10.0, u_min=2.0, u_max=2.0)
    with pytest.raises(ValueError):
        VehicleSpec(1, 8.0, 10.0, accel_gain=0.0)
    with pytest.raises(ValueError):
        VehicleSpec(1, 8.0, 10.0, drag_coeff=-0.1)


def test_signal_validation():
    with pytest.raises(ValueError):
        PiecewiseConstantInput((0.5,), (1.0,))
    with pytest.raises(ValueError):
        PiecewiseConstantInput((0.0, 1.0, 1.0), (1.0, 0.0, 2.0))
    with pytest.raises(ValueError):
        PiecewiseConstantInput((0.0, 1.0), (1.0,))
    with pytest.raises(ValueError):
        PiecewiseConstantInput((0.0,), (3.0,)).check_bounds(SPEC)


def test_time_to_already_past():
    assert dyn.time_to_position(VehicleState(25.0, 9.0), SPEC, 2.0, 20.0) == 0.0


def test_time_to_saturated_cruise():
    assert dyn.time_to_position(VehicleState(0.0, 10.0), SPEC, 2.0, 20.0) == pytest.approx(2.0, abs=1e-9)


def test_time_to_matches_golden(dynamics_golden):
    t = dyn.time_to_position(VehicleState(0.0, 8.0), SPEC, 2.0, 20.0)
    assert t == pytest.approx(dynamics_golden["time_to_20_from_v8_u2"], abs=1e-8)


def test_max_time_floor_cruise():
    assert dyn.max_time_to(VehicleState(0.0, 8.0), SPEC, 20.0) == pytest.approx(2.5, abs=1e-9)


def test_extremal_times_at_target():
    s = VehicleState(20.0, 9.0)
    assert dyn.min_time_to(s, SPEC, 20.0) == 0.0
    assert dyn.max_time_to(s, SPEC, 20.0) == 0.0


def test_max_time_matches_golden(dynamics_golden):
    t = dyn.max_time_to(VehicleState(0.0, 10.0), SPEC, 20.0)
    assert t == pytest.approx(dynamics_golden["max_time_to_20_from_v10"], abs=1e-8)


def test_simulate_linear_ramp_without_drag():
    spec = VehicleSpec(1, 1.0, 10.0, drag_coeff=0.0)
    tr = dyn.simulate_signal(VehicleState(2.0, 7.0), spec, PiecewiseConstantInput.constant(0.0), 3.0, 0.25)
    assert np.allclose(tr.pos, 2.0 + 7.0 * tr.times, atol=1e-12)
    assert np.all(tr.speed == 7.0)


def test_simulate_saturated_grid():
    tr = dyn.simulate_signal(VehicleState(0.0, 10.0), SPEC, PiecewiseConstantInput.constant(2.0), 2.0, 0.1)
    assert np.allclose(tr.pos, 10.0 * 0.1 * np.arange(21), atol=1e-12)


def test_simulate_matches_step_composition():
    sig = PiecewiseConstantInput((0.0, 0.35, 1.2), (2.0, -1.5, 0.5))
    tr = dyn.simulate_signal(VehicleState(0.0, 9.0), SPEC, sig, 2.0, 0.1)
    s = VehicleState(0.0, 9.0)
    pieces = [(0.35, 2.0), (0.85, -1.5), (0.8, 0.5)]
    for dt, u in pieces:
        s = dyn.step(s, SPEC, u, dt)
    assert tr.pos[-1] == pytest.approx(s.pos, abs=1e-9)
    assert tr.speed[-1] == pytest.approx(s.speed, abs=1e-9)
    s2 = dyn.advance_signal(VehicleState(0.0, 9.0), SPEC, sig, 2.0)
    assert s2.pos == pytest.approx(s.pos, abs=1e-9)


def test_simulate_rejects_nonpositive_horizon():
    with pytest.raises(ValueError):
        dyn.simulate_signal(VehicleState(0.0, 9.0), SPEC, PiecewiseConstantInput.constant(0.0), 0.0, 0.1)


# ------------------------------------------------------------ oracles


@pytest.mark.parametrize(
    "name", ["accel_to_cap", "brake_to_floor", "mixed_wide_band", "bang_bang", "coast_with_drag"]
)
def test_trajectory_matches_golden(dynamics_golden, name):
    g = dynamics_golden["trajectories"][name]
    spec = VehicleSpec(1, g["v_min"], g["v_max"])
    sig = PiecewiseConstantInput(tuple(g["breakpoints"]), tuple(g["values"]))
    tr = dyn.simulate_signal(VehicleState(g["x0"], g["v0"]), spec, sig, dynamics_golden["horizon"], 0.1)
    assert np.abs(tr.pos - np.array(g["pos"])).max() <= 1e-6
    assert np.abs(tr.speed - np.array(g["speed"])).max() <= 1e-6


def test_golden_reproducible_from_oracle(dynamics_golden):
    g = dynamics_golden["trajectories"]["bang_bang"]
    x, v = reference_samples(g["x0"], g["v0"], g["breakpoints"], g["values"], 1.0, 0.005,
                             g["v_min"], g["v_max"], 5.0, 0.1)
    assert np.allclose(x, g["pos"], atol=1e-12)
    assert np.allclose(v, g["speed"], atol=1e-12)


@pytest.mark.parametrize("u", [-2.0, -0.7, 0.0, 1.0, 2.0])
@pytest.mark.parametrize("v0", [8.0, 9.0, 10.0])
def test_no_drag_closed_form(u, v0):
    for t in (0.1, 0.37, 1.0, 2.5):
        out = dyn.step(VehicleState(1.0, v0), NO_DRAG, u, t)
        x, v = const_accel_state(1.0, v0, u, 8.0, 10.0, t)
        assert out.pos == pytest.approx(x, abs=1e-9)
        assert out.speed == pytest.approx(v, abs=1e-9)
    t = dyn.time_to_position(VehicleState(1.0, v0), NO_DRAG, u, 21.0)
    assert t == pytest.approx(const_accel_time_to(1.0, v0, u, 8.0, 10.0, 21.0), abs=1e-8)


def test_time_to_against_oracle():
    for v0, u, target in [(5.0, 1.5, 30.0), (14.0, -2.0, 25.0), (3.0, 0.0, 12.0)]:
        t = dyn.time_to_position(VehicleState(0.0, v0), WIDE, u, target)
        ref = reference_time_to(0.0, v0, u, 1.0, 0.005, 1.0, 15.0, target)
        assert t == pytest.approx(ref, abs=1e-7)


# ---------------------------------------------------------- properties

speeds = st.floats(8.0, 10.0)
inputs = st.floats(-2.0, 2.0)
durations = st.floats(0.001, 3.0)


@given(speeds, inputs, durations, durations)
def test_composition(v0, u, dt1, dt2):
    s = VehicleState(0.0, v0)
    whole = dyn.step(s, SPEC, u, dt1 + dt2)
    parts = dyn.step(dyn.step(s, SPEC, u, dt1), SPEC, u, dt2)
    assert whole.pos == pytest.approx(parts.pos, abs=1e-9)
    assert whole.speed == pytest.approx(parts.speed, abs=1e-9)


@given(st.floats(1.0, 15.0), inputs, inputs, st.floats(1.0, 60.0))
def test_time_to_monotone_in_input(v0, u1, u2, target):
    lo, hi = min(u1, u2), max(u1, u2)
    s = VehicleState(0.0, v0)
    assert dyn.time_to_position(s, WIDE, lo, target) >= dyn.time_to_position(s, WIDE, hi, target) - 1e-9


@given(
    st.floats(1.0, 15.0),
    st.lists(st.tuples(st.floats(0.05, 1.0), inputs), min_size=1, max_size=5),
)
def test_position_increasing_and_speed_bounded(v0, pieces):
    bps, t = [], 0.0
    for dt, _ in pieces:
        bps.append(t)
        t += dt
    sig = PiecewiseConstantInput(tuple(bps), tuple(u for _, u in pieces))
    tr = dyn.simulate_signal(VehicleState(0.0, v0), WIDE, sig, 4.0, 1e-3)
    assert np.all(np.diff(tr.pos) > 0)
    assert tr.speed.min() >= WIDE.v_min
    assert tr.speed.max() <= WIDE.v_max


@given(
    st.floats(0.0, 5.0), st.floats(0.0, 3.0),
    st.floats(1.0, 15.0), st.floats(0.0, 5.0),
    st.lists(st.tuples(inputs, inputs), min_size=1, max_size=4),
    st.floats(0.0, 4.0), st.floats(0.0, 1.0),
)
def test_monotonicity(x0, dx, v0, dv, levels, t, dt):
    """Larger start and pointwise-larger input never ends up behind, even when observed later."""
    bps = tuple(0.7 * k for k in range(len(levels)))
    lo = PiecewiseConstantInput(bps, tuple(min(a, b) for a, b in levels))
    hi = PiecewiseConstantInput(bps, tuple(max(a, b) for a, b in levels))
    v1 = min(v0 + dv, 15.0)
    a = dyn.advance_signal(VehicleState(x0, v0), WIDE, lo, t)
    b = dyn.advance_signal(VehicleState(x0 + dx, v1), WIDE, hi, t + dt)
    assert a.pos <= b.pos + 1e-9


def test_deterministic():
    sig = PiecewiseConstantInput((0.0, 0.3), (2.0, -2.0))
    a = dyn.simulate_signal(VehicleState(0.0, 9.0), SPEC, sig, 1.0, 0.01)
    b = dyn.simulate_signal(VehicleState(0.0, 9.0), SPEC, sig, 1.0, 0.01)
    assert a.pos.tobytes() == b.pos.tobytes()
    assert a.speed.tobytes() == b.speed.tobytes()


def test_crossing_times_match_time_to():
    s = VehicleState(0.0, 8.5)
    sig = PiecewiseConstantInput.constant(1.0)
    got = dyn.crossing_times(s, SPEC, sig, [5.0, 20.0, 31.0])
    want = [dyn.time_to_position(s, SPEC, 1.0, x) for x in (5.0, 20.0, 31.0)]
    assert np.allclose(got, want, atol=1e-8)
