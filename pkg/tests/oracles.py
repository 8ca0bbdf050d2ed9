"""Reference implementations used only by the tests.

None of these share code with the package: the dynamics reference is a
fine-step explicit Euler scheme (with Richardson extrapolation), the
longest-path reference is plain synchronous value iteration.
"""

from __future__ import annotations

import math
import random

import numpy as np
from numba import njit

EULER_STEP = 1e-6


@njit(cache=True)
def _euler(x, v, bps, vals, a, b, vmin, vmax, horizon, h, sample_every, out_x, out_v):
    n = int(round(horizon / h))
    seg = 0
    nseg = bps.shape[0]
    k_out = 0
    for k in range(n):
        t = k * h
        while seg + 1 < nseg and t >= bps[seg + 1] - 0.5 * h:
            seg += 1
        if k % sample_every == 0:
            out_x[k_out] = x
            out_v[k_out] = v
            k_out += 1
        acc = a * vals[seg] + b * v * v
        if (v >= vmax and acc > 0.0) or (v <= vmin and acc < 0.0):
            acc = 0.0
        x = x + h * v
        v = v + h * acc
        if v > vmax:
            v = vmax
        if v < vmin:
            v = vmin
    out_x[k_out] = x
    out_v[k_out] = v
    return k_out + 1


def euler_samples(x0, v0, breakpoints, values, a, b, vmin, vmax, horizon, sample_dt, h=EULER_STEP):
    """Euler positions/speeds at multiples of ``sample_dt`` (which must be a multiple of ``h``)."""
    every = int(round(sample_dt / h))
    m = int(round(horizon / sample_dt)) + 1
    out_x = np.zeros(m)
    out_v = np.zeros(m)
    bps = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)
    _euler(float(x0), float(v0), bps, vals, a, b, vmin, vmax, horizon, h, every, out_x, out_v)
    return out_x, out_v


def reference_samples(x0, v0, breakpoints, values, a, b, vmin, vmax, horizon, sample_dt):
    """Richardson-extrapolated Euler at steps 1e-6 and 2e-6."""
    fx, fv = euler_samples(x0, v0, breakpoints, values, a, b, vmin, vmax, horizon, sample_dt, EULER_STEP)
    cx, cv = euler_samples(x0, v0, breakpoints, values, a, b, vmin, vmax, horizon, sample_dt, 2 * EULER_STEP)
    return 2 * fx - cx, np.clip(2 * fv - cv, vmin, vmax)


@njit(cache=True)
def _euler_crossing(x, v, u, a, b, vmin, vmax, target, h):
    t = 0.0
    if x >= target:
        return 0.0
    while True:
        acc = a * u + b * v * v
        if (v >= vmax and acc > 0.0) or (v <= vmin and acc < 0.0):
            acc = 0.0
        x_new = x + h * v
        if x_new >= target:
            return t + h * (target - x) / (x_new - x)
        x = x_new
        v = min(max(v + h * acc, vmin), vmax)
        t += h


def reference_time_to(x0, v0, u, a, b, vmin, vmax, target):
    """Crossing time under constant ``u``, Richardson-extrapolated Euler."""
    fine = _euler_crossing(float(x0), float(v0), float(u), a, b, vmin, vmax, float(target), EULER_STEP)
    coarse = _euler_crossing(float(x0), float(v0), float(u), a, b, vmin, vmax, float(target), 2 * EULER_STEP)
    return 2 * fine - coarse


# ----------------------------------------------------------------------------
# closed forms with no drag


def const_accel_state(x0, v0, acc, vmin, vmax, t):
    """Position and speed after ``t`` under constant acceleration with speed clamping."""
    if acc > 0 and v0 < vmax:
        t_sat = (vmax - v0) / acc
    elif acc < 0 and v0 > vmin:
        t_sat = (vmin - v0) / acc
    else:
        t_sat = 0.0
    if t <= t_sat:
        return x0 + v0 * t + 0.5 * acc * t * t, v0 + acc * t
    v_sat = v0 + acc * t_sat
    x_sat = x0 + v0 * t_sat + 0.5 * acc * t_sat * t_sat
    return x_sat + v_sat * (t - t_sat), v_sat


def const_accel_time_to(x0, v0, acc, vmin, vmax, target):
    if x0 >= target:
        return 0.0
    if acc > 0 and v0 < vmax:
        t_sat = (vmax - v0) / acc
    elif acc < 0 and v0 > vmin:
        t_sat = (vmin - v0) / acc
    else:
        return (target - x0) / v0
    x_sat, v_sat = const_accel_state(x0, v0, acc, vmin, vmax, t_sat)
    if target <= x_sat:
        # x0 + v0 t + acc t^2 / 2 = target, smallest positive root
        disc = v0 * v0 + 2 * acc * (target - x0)
        return (-v0 + math.sqrt(disc)) / acc
    return t_sat + (target - x_sat) / v_sat


# ----------------------------------------------------------------------------
# difference constraints


def value_iteration(lower_bounds, diffs, var_count, max_rounds=None):
    """Synchronous fixpoint of ``t = max(0, lb, t_w + c)``; None if it does not settle."""
    t = np.zeros(var_count)
    for v, c in lower_bounds:
        t[v] = max(t[v], c)
    if not diffs:
        return t
    vv = np.array([d[0] for d in diffs])
    ww = np.array([d[1] for d in diffs])
    cc = np.array([d[2] for d in diffs], dtype=float)
    rounds = max_rounds or var_count + 2
    for _ in range(rounds):
        new = t.copy()
        np.maximum.at(new, vv, t[ww] + cc)
        if np.array_equal(new, t):
            return t
        t = new
    return None


def random_dtp_parts(rng: random.Random, n_vars: int, n_diffs: int, n_dis: int, n_due: int, soft: int = 0):
    """Random constraint lists with mostly small positive constants."""
    lbs = [(rng.randrange(n_vars), round(rng.uniform(0, 3), 3)) for _ in range(rng.randint(1, n_vars))]
    diffs = []
    for _ in range(n_diffs):
        v, w = rng.sample(range(n_vars), 2)
        diffs.append((v, w, round(rng.uniform(-1.5, 2.0), 3)))
    dis = []
    for _ in range(n_dis):
        v, w = rng.sample(range(n_vars), 2)
        a = ((w, v, round(rng.uniform(0, 1.5), 3)),)
        b = ((v, w, round(rng.uniform(0, 1.5), 3)),)
        if rng.random() < 0.3:
            x, y = rng.sample(range(n_vars), 2)
            a = a + ((x, y, round(rng.uniform(-1, 1), 3)),)
        dis.append((a, b))
    due = [(rng.randrange(n_vars), round(rng.uniform(0, 5), 3)) for _ in range(n_due)]
    soft_diffs = []
    for _ in range(soft):
        v, w = rng.sample(range(n_vars), 2)
        soft_diffs.append((v, w, round(rng.uniform(0, 2), 3)))
    return lbs, diffs, dis, due, soft_diffs
