"""Compiled integration kernels for the longitudinal vehicle model.

Every routine integrates ``xdd = a*u + b*xd**2`` with the speed held inside
``[vmin, vmax]`` by projecting the vector field: once the speed sits on a bound
and the raw acceleration points outward, the vehicle cruises.  Integration uses
classical RK4 on a fixed grid of ``H`` seconds measured from the start of each
call; a step that would cross a speed bound is cut at the crossing, located by
bisection on the sub-step length.

The kernels are plain floats in, floats out so that the Python layer can stay
free of numba types.
"""

from __future__ import annotations

import numpy as np
from numba import njit

H = 1e-3
_BISECT_ITERS = 80
_MAX_STEPS = 100_000_000


@njit(cache=True)
def _field(v, u, a, b):
    return a * u + b * v * v


@njit(cache=True)
def _is_saturated(v, u, a, b, vmin, vmax):
    f = a * u + b * v * v
    return (v >= vmax and f > 0.0) or (v <= vmin and f < 0.0)


@njit(cache=True)
def _rk4(x, v, u, a, b, h):
    k1 = a * u + b * v * v
    v2 = v + 0.5 * h * k1
    k2 = a * u + b * v2 * v2
    v3 = v + 0.5 * h * k2
    k3 = a * u + b * v3 * v3
    v4 = v + h * k3
    k4 = a * u + b * v4 * v4
    xn = x + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    vn = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return xn, vn


@njit(cache=True)
def substep(x, v, u, a, b, vmin, vmax, h):
    """One integration step of length ``h`` (at most a grid step)."""
    if h <= 0.0:
        return x, v
    if _is_saturated(v, u, a, b, vmin, vmax):
        return x + v * h, v
    x1, v1 = _rk4(x, v, u, a, b, h)
    if v1 > vmax or v1 < vmin:
        upper = v1 > vmax
        bound = vmax if upper else vmin
        lo = 0.0
        hi = h
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            _, vm = _rk4(x, v, u, a, b, mid)
            if (vm > vmax) if upper else (vm < vmin):
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-16:
                break
        xe, _ = _rk4(x, v, u, a, b, lo)
        return xe + bound * (h - lo), bound
    return x1, v1


@njit(cache=True)
def _grid(dt):
    n = int(dt / H)
    rem = dt - n * H
    if rem < 1e-13:
        rem = 0.0
    elif H - rem < 1e-13:
        n += 1
        rem = 0.0
    return n, rem


@njit(cache=True)
def advance(x, v, u, a, b, vmin, vmax, dt):
    """State after holding input ``u`` for ``dt`` seconds."""
    if dt <= 0.0:
        return x, v
    n, rem = _grid(dt)
    for k in range(n):
        if _is_saturated(v, u, a, b, vmin, vmax):
            return x + v * ((n - k) * H + rem), v
        x, v = substep(x, v, u, a, b, vmin, vmax, H)
    if rem > 0.0:
        x, v = substep(x, v, u, a, b, vmin, vmax, rem)
    return x, v


@njit(cache=True)
def time_to(x, v, u, a, b, vmin, vmax, target):
    """Time for position to reach ``target`` under constant ``u`` (0 if already past)."""
    if x >= target:
        return 0.0
    for k in range(_MAX_STEPS):
        t = k * H
        if _is_saturated(v, u, a, b, vmin, vmax):
            return t + (target - x) / v
        x1, v1 = substep(x, v, u, a, b, vmin, vmax, H)
        if x1 >= target:
            lo = 0.0
            hi = H
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                xm, _ = substep(x, v, u, a, b, vmin, vmax, mid)
                if xm >= target:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-16:
                    break
            return t + hi
        x = x1
        v = v1
    return np.inf


@njit(cache=True)
def advance_signal(x, v, a, b, vmin, vmax, bps, vals, duration):
    """Apply a piecewise-constant signal (times relative to now) for ``duration``."""
    nseg = bps.shape[0]
    for s in range(nseg):
        start = bps[s]
        if start >= duration:
            break
        end = bps[s + 1] if s + 1 < nseg else np.inf
        if end > duration:
            end = duration
        if end > start:
            x, v = advance(x, v, vals[s], a, b, vmin, vmax, end - start)
    return x, v


@njit(cache=True)
def simulate(x, v, a, b, vmin, vmax, bps, vals, n_samples, dt):
    """Positions and speeds at ``k*dt`` for ``k = 0..n_samples``."""
    xs = np.empty(n_samples + 1)
    vs = np.empty(n_samples + 1)
    xs[0] = x
    vs[0] = v
    nseg = bps.shape[0]
    seg = 0
    for k in range(n_samples):
        t0 = k * dt
        t1 = (k + 1) * dt
        t = t0
        while t < t1:
            while seg + 1 < nseg and bps[seg + 1] <= t:
                seg += 1
            end = t1
            if seg + 1 < nseg and bps[seg + 1] < t1:
                end = bps[seg + 1]
            x, v = advance(x, v, vals[seg], a, b, vmin, vmax, end - t)
            t = end
        xs[k + 1] = x
        vs[k + 1] = v
    return xs, vs


@njit(cache=True)
def two_phase_arrival(x, v, a, b, vmin, vmax, ua, ub, ts, target):
    """Arrival time at ``target`` holding ``ua`` on ``[0, ts)`` and ``ub`` afterwards."""
    ta = time_to(x, v, ua, a, b, vmin, vmax, target)
    if ts >= ta:
        return ta
    x1, v1 = advance(x, v, ua, a, b, vmin, vmax, ts)
    return ts + time_to(x1, v1, ub, a, b, vmin, vmax, target)


@njit(cache=True)
def solve_switch(x, v, a, b, vmin, vmax, ua, ub, target, arrival, ts_hi):
    """Switch time in ``[0, ts_hi]`` whose two-phase arrival matches ``arrival``.

    The arrival map is monotone in the switch time; the returned value sits on
    the side that arrives no earlier than requested.
    """
    g0 = two_phase_arrival(x, v, a, b, vmin, vmax, ua, ub, 0.0, target)
    g1 = two_phase_arrival(x, v, a, b, vmin, vmax, ua, ub, ts_hi, target)
    increasing = g1 >= g0
    lo = 0.0
    hi = ts_hi
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        gm = two_phase_arrival(x, v, a, b, vmin, vmax, ua, ub, mid, target)
        late = gm >= arrival
        if late == increasing:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15:
            break
    return hi if increasing else lo


@njit(cache=True)
def crossing_times(x, v, a, b, vmin, vmax, bps, vals, targets):
    """First time the position reaches each of the ascending ``targets``."""
    out = np.empty(targets.shape[0])
    nseg = bps.shape[0]
    seg = 0
    t = 0.0
    for i in range(targets.shape[0]):
        tgt = targets[i]
        if x >= tgt:
            out[i] = t
            continue
        while True:
            end = bps[seg + 1] if seg + 1 < nseg else np.inf
            u = vals[seg]
            tt = time_to(x, v, u, a, b, vmin, vmax, tgt)
            if t + tt <= end:
                x, v = advance(x, v, u, a, b, vmin, vmax, tt)
                t = t + tt
                out[i] = t
                break
            x, v = advance(x, v, u, a, b, vmin, vmax, end - t)
            t = end
            seg += 1
    return out
