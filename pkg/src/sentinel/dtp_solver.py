"""Minimum maximum-lateness over a disjunctive temporal problem.

A problem has time variables ``0..var_count-1`` (all implicitly ``>= 0``),
hard lower bounds ``v >= c``, difference constraints ``v >= w + c``, and
disjunctions, each a pair of constraint bundles of which one must hold.  The
objective is the largest lateness ``max(t_v - due_v, 0)`` over due-dated
variables, optionally also counting ``max(t_v - t_w - c, 0)`` for soft
difference constraints ``v <= w + c``.

For a fixed choice of bundles the least solution of the difference system is
optimal for hard due dates (the objective is non-decreasing in every
variable), so no LP solver is involved: the search is depth-first over bundle
choices with longest-path propagation of earliest times ``lo`` and latest
times ``hi = due + bound``.  See ``docs`` in the README for the LP export
layout.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

#: Feasibility / cost tolerance (s).
TOL = 1e-9
#: Minimum increase that counts as a relaxation in longest-path updates.
RELAX_EPS = 1e-12

Diff = tuple[int, int, float]  # (v, w, c): v >= w + c


class InfeasibleCycle(Exception):
    """Positive cycle in a difference-constraint system."""

    def __init__(self, variables: Sequence[int]):
        super().__init__(f"positive cycle through variables {list(variables)}")
        self.variables = list(variables)


@dataclass(frozen=True)
class DisjunctiveTemporalProblem:
    var_count: int
    lower_bounds: tuple[tuple[int, float], ...] = ()
    diffs: tuple[Diff, ...] = ()
    disjunctions: tuple[tuple[tuple[Diff, ...], tuple[Diff, ...]], ...] = ()
    due_dates: tuple[tuple[int, float], ...] = ()
    soft_diffs: tuple[Diff, ...] = ()
    keys: tuple = ()
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = self.var_count
        norm = lambda seq: tuple(tuple(x) for x in seq)  # noqa: E731
        object.__setattr__(self, "lower_bounds", tuple((int(v), float(c)) for v, c in self.lower_bounds))
        object.__setattr__(self, "diffs", tuple((int(v), int(w), float(c)) for v, w, c in self.diffs))
        object.__setattr__(self, "soft_diffs", tuple((int(v), int(w), float(c)) for v, w, c in self.soft_diffs))
        object.__setattr__(self, "due_dates", tuple((int(v), float(d)) for v, d in self.due_dates))
        dis = tuple(
            (
                tuple((int(v), int(w), float(c)) for v, w, c in a),
                tuple((int(v), int(w), float(c)) for v, w, c in b),
            )
            for a, b in self.disjunctions
        )
        object.__setattr__(self, "disjunctions", dis)
        object.__setattr__(self, "keys", norm(self.keys))
        for v, c in self.lower_bounds:
            _check_var(v, n)
        for v, w, c in self.diffs + self.soft_diffs + tuple(x for a, b in dis for x in a + b):
            _check_var(v, n)
            _check_var(w, n)
            if not math.isfinite(c):
                raise ValueError("difference constants must be finite")
        for v, d in self.due_dates:
            _check_var(v, n)
            if not math.isfinite(d):
                raise ValueError("due dates must be finite")
        if self.keys and len(self.keys) != len(dis):
            raise ValueError("one key per disjunction expected")


def _check_var(v: int, n: int) -> None:
    if not 0 <= v < n:
        raise ValueError(f"variable {v} out of range 0..{n - 1}")


@dataclass(frozen=True)
class DtpSolution:
    cost: float
    times: tuple[float, ...]
    orientation: tuple[int, ...]  # 0 = first bundle, 1 = second bundle
    nodes: int = field(default=0, compare=False)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)


# ----------------------------------------------------------------------------
# earliest times


def earliest_times(
    lower_bounds: Sequence[tuple[int, float]], diffs: Sequence[Diff], var_count: int
) -> list[float]:
    """Least vector with ``t >= 0``, ``t_v >= c`` and ``t_v >= t_w + c``.

    Label-correcting longest path from a virtual origin; raises
    :class:`InfeasibleCycle` on a positive cycle.
    """
    n = var_count
    lo = [0.0] * n
    for v, c in lower_bounds:
        if c > lo[v]:
            lo[v] = float(c)
    out: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for v, w, c in diffs:
        out[w].append((v, c))
    pred = [-1] * n
    count = [0] * n
    queue = deque(range(n))
    queued = [True] * n
    while queue:
        w = queue.popleft()
        queued[w] = False
        base = lo[w]
        for v, c in out[w]:
            if base + c > lo[v] + RELAX_EPS:
                lo[v] = base + c
                pred[v] = w
                if not queued[v]:
                    count[v] += 1
                    if count[v] > n:
                        raise InfeasibleCycle(_cycle_from(pred, v, n))
                    queued[v] = True
                    queue.append(v)
    return lo


def _cycle_from(pred: list[int], v: int, n: int) -> list[int]:
    for _ in range(n):
        if pred[v] < 0:
            break
        v = pred[v]
    cycle = [v]
    u = pred[v]
    while u != v and u >= 0 and len(cycle) <= n:
        cycle.append(u)
        u = pred[u]
    cycle.reverse()
    return cycle


def _lateness(problem: DisjunctiveTemporalProblem, times: Sequence[float]) -> float:
    worst = 0.0
    for v, d in problem.due_dates:
        worst = max(worst, times[v] - d)
    for v, w, c in problem.soft_diffs:
        worst = max(worst, times[v] - times[w] - c)
    return worst


def _chosen(problem: DisjunctiveTemporalProblem, orientation: Sequence[int | None]) -> list[Diff]:
    out = list(problem.diffs)
    for (a, b), side in zip(problem.disjunctions, orientation):
        if side == 0:
            out.extend(a)
        elif side == 1:
            out.extend(b)
    return out


def _feasible_at(problem: DisjunctiveTemporalProblem, diffs: list[Diff], bound: float) -> list[float] | None:
    """Least solution meeting every lateness term within ``bound``, or None."""
    n = problem.var_count
    origin = n  # extra variable pinned at 0
    lbs = list(problem.lower_bounds) + [(v, 0.0) for v in range(n)]
    edges = list(diffs) + [(v, origin, c) for v, c in lbs]
    edges += [(origin, v, -(d + bound)) for v, d in problem.due_dates]
    edges += [(w, v, -(c + bound)) for v, w, c in problem.soft_diffs]
    try:
        lo = earliest_times([], edges, n + 1)
    except InfeasibleCycle:
        return None
    if lo[origin] > RELAX_EPS:
        return None
    return lo[:n]


def orientation_cost(
    problem: DisjunctiveTemporalProblem, orientation: Sequence[int | None]
) -> tuple[float, list[float] | None]:
    """Optimal cost and times for a fixed (possibly partial) orientation.

    Unresolved entries (``None``) are dropped, which yields the relaxed cost.
    """
    diffs = _chosen(problem, orientation)
    try:
        lo = earliest_times(problem.lower_bounds, diffs, problem.var_count)
    except InfeasibleCycle:
        return math.inf, None
    cost = _lateness(problem, lo)
    if not problem.soft_diffs or cost <= TOL:
        return cost, lo
    # soft terms are not monotone in the variables: bisect on the bound
    hi_b, best = cost, lo
    lo_b = max([0.0] + [lo[v] - d for v, d in problem.due_dates])
    sol = _feasible_at(problem, diffs, lo_b)
    if sol is not None:
        return lo_b, sol
    for _ in range(200):
        if hi_b - lo_b <= 1e-13 * max(1.0, hi_b):
            break
        mid = 0.5 * (lo_b + hi_b)
        sol = _feasible_at(problem, diffs, mid)
        if sol is None:
            lo_b = mid
        else:
            hi_b, best = mid, sol
    return _lateness(problem, best), best


relaxed_cost = orientation_cost


# ----------------------------------------------------------------------------
# branch and bound


class _Search:
    def __init__(self, problem: DisjunctiveTemporalProblem, bound: float, stop_at_zero: bool):
        self.p = problem
        n = problem.var_count
        self.n = n
        self.fwd: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.bwd: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for v, w, c in problem.diffs:
            self.fwd[w].append((v, c))
            self.bwd[v].append((w, c))
        self.due = [math.inf] * n
        for v, d in problem.due_dates:
            self.due[v] = min(self.due[v], d)
        self.soft = bool(problem.soft_diffs)
        self.bound = bound
        self.stop_at_zero = stop_at_zero
        self.best: DtpSolution | None = None
        self.nodes = 0
        self.sides = [(a, b) for a, b in problem.disjunctions]

    # propagation -------------------------------------------------------------

    def _hi(self) -> list[float]:
        return [d + self.bound for d in self.due]

    def _push(self, lo: list[float], hi: list[float], edges: Sequence[Diff]) -> bool:
        """Add constraints to the current node and re-establish lo/hi; False on conflict."""
        n = self.n
        fq: deque[int] = deque()
        bq: deque[int] = deque()
        for v, w, c in edges:
            self.fwd[w].append((v, c))
            self.bwd[v].append((w, c))
            if lo[w] + c > lo[v] + RELAX_EPS:
                lo[v] = lo[w] + c
                fq.append(v)
            if hi[v] - c < hi[w] - RELAX_EPS:
                hi[w] = hi[v] - c
                bq.append(w)
        return self._settle(lo, hi, fq, bq)

    def _settle(self, lo: list[float], hi: list[float], fq: deque, bq: deque) -> bool:
        n = self.n
        inq = [False] * n
        for v in fq:
            inq[v] = True
        count = [0] * n
        while fq:
            w = fq.popleft()
            inq[w] = False
            if lo[w] > hi[w] + TOL:
                return False
            count[w] += 1
            if count[w] > n + 1:
                return False  # positive cycle
            base = lo[w]
            for v, c in self.fwd[w]:
                if base + c > lo[v] + RELAX_EPS:
                    lo[v] = base + c
                    if not inq[v]:
                        inq[v] = True
                        fq.append(v)
        inq = [False] * n
        for v in bq:
            inq[v] = True
        count = [0] * n
        while bq:
            v = bq.popleft()
            inq[v] = False
            if lo[v] > hi[v] + TOL:
                return False
            count[v] += 1
            if count[v] > n + 1:
                return False
            top = hi[v]
            for w, c in self.bwd[v]:
                if top - c < hi[w] - RELAX_EPS:
                    hi[w] = top - c
                    if not inq[w]:
                        inq[w] = True
                        bq.append(w)
        return True

    def _pop(self, edges: Sequence[Diff]) -> None:
        for v, w, c in reversed(edges):
            self.fwd[w].pop()
            self.bwd[v].pop()

    @staticmethod
    def _possible(side: Sequence[Diff], lo: list[float], hi: list[float]) -> bool:
        for v, w, c in side:
            if lo[w] + c > hi[v] + TOL:
                return False
        return True

    @staticmethod
    def _violation(side: Sequence[Diff], lo: list[float]) -> float:
        worst = -math.inf
        for v, w, c in side:
            worst = max(worst, lo[w] + c - lo[v])
        return worst

    # search --------------------------------------------------------------------

    def run(self) -> DtpSolution | None:
        n = self.n
        lo = [0.0] * n
        for v, c in self.p.lower_bounds:
            lo[v] = max(lo[v], c)
        hi = self._hi()
        base = list(self.p.diffs)
        # seed propagation: re-push fixed diffs on fresh arrays
        for lst in self.fwd + self.bwd:
            lst.clear()
        if any(lo[v] > hi[v] + TOL for v in range(n)):
            return None
        if not self._push(lo, hi, base):
            return None
        orient: list[int | None] = [None] * len(self.sides)
        self._dfs(lo, hi, orient)
        return self.best

    def _done(self) -> bool:
        return self.best is not None and (self.best.cost <= TOL or self.stop_at_zero)

    def _dfs(self, lo: list[float], hi: list[float], orient: list[int | None]) -> None:
        self.nodes += 1
        pushed: list[tuple[int, tuple[Diff, ...]]] = []
        ok = self._unit_propagate(lo, hi, orient, pushed)
        if ok:
            self._expand(lo, hi, orient)
        for k, edges in reversed(pushed):
            self._pop(edges)
            orient[k] = None

    def _unit_propagate(self, lo, hi, orient, pushed) -> bool:
        changed = True
        while changed:
            changed = False
            for k, (a, b) in enumerate(self.sides):
                if orient[k] is not None:
                    continue
                pa = self._possible(a, lo, hi)
                pb = self._possible(b, lo, hi)
                if not pa and not pb:
                    return False
                if pa and pb:
                    continue
                side = 0 if pa else 1
                edges = a if pa else b
                orient[k] = side
                ok = self._push(lo, hi, edges)
                pushed.append((k, edges))
                if not ok:
                    return False
                changed = True
        return True

    def _expand(self, lo, hi, orient) -> None:
        pick = -1
        pick_score = -math.inf
        pick_order = (0, 1)
        for k, (a, b) in enumerate(self.sides):
            if orient[k] is not None:
                continue
            va = self._violation(a, lo)
            vb = self._violation(b, lo)
            if va <= RELAX_EPS or vb <= RELAX_EPS:
                if not self.soft:
                    continue  # already satisfied by the earliest times
            score = min(va, vb)
            if score > pick_score:
                pick, pick_score = k, score
                pick_order = (1, 0) if vb < va else (0, 1)
        if pick < 0:
            self._leaf(lo, orient)
            return
        hi_bound = self.bound
        for side in pick_order:
            if self._done():
                return
            edges = self.sides[pick][side]
            if not self._possible(edges, lo, hi):
                continue
            lo2 = list(lo)
            # an incumbent found deeper down may have tightened the bound
            stale = hi_bound != self.bound
            hi2 = self._hi() if stale else list(hi)
            orient[pick] = side
            ok = self._push(lo2, hi2, edges)
            if ok and stale:
                ok = self._settle(lo2, hi2, deque(), deque(range(self.n)))
            if ok:
                self._dfs(lo2, hi2, orient)
            self._pop(edges)
            orient[pick] = None

    def _leaf(self, lo: list[float], orient: list[int | None]) -> None:
        full = []
        for k, (a, b) in enumerate(self.sides):
            if orient[k] is not None:
                full.append(orient[k])
            else:
                full.append(0 if self._violation(a, lo) <= RELAX_EPS else 1)
        if self.soft:
            cost, times = orientation_cost(self.p, full)
            if times is None:
                return
        else:
            cost, times = _lateness(self.p, lo), list(lo)
        if cost > self.bound + TOL:
            return
        if self.best is None or cost < self.best.cost - TOL:
            self.best = DtpSolution(max(cost, 0.0), tuple(times), tuple(full))
            if cost > TOL:
                self.bound = cost - TOL
            else:
                self.bound = 0.0


def min_max_lateness(problem: DisjunctiveTemporalProblem) -> DtpSolution:
    """Exact minimum of the maximum lateness over all disjunction orientations."""
    first = _Search(problem, 0.0, stop_at_zero=True)
    sol = first.run()
    nodes = first.nodes
    if sol is None:
        search = _Search(problem, math.inf, stop_at_zero=False)
        sol = search.run()
        nodes += search.nodes
    if sol is None:
        return DtpSolution(math.inf, (), (), nodes)
    cost = 0.0 if sol.cost <= TOL else sol.cost
    return DtpSolution(cost, sol.times, sol.orientation, nodes)


def feasible_zero_lateness(problem: DisjunctiveTemporalProblem) -> DtpSolution | None:
    """Any orientation meeting every due date, or None when the optimum is positive."""
    search = _Search(problem, 0.0, stop_at_zero=True)
    sol = search.run()
    if sol is None:
        return None
    return DtpSolution(0.0, sol.times, sol.orientation, search.nodes)


MAX_ENUMERATION = 20


def enumerate_exact(problem: DisjunctiveTemporalProblem) -> DtpSolution:
    """Brute force over all ``2**k`` orientations (testing oracle)."""
    k = len(problem.disjunctions)
    if k > MAX_ENUMERATION:
        raise ValueError(f"{k} disjunctions exceed the enumeration limit of {MAX_ENUMERATION}")
    best = DtpSolution(math.inf, (), ())
    for orient in itertools.product((0, 1), repeat=k):
        cost, times = orientation_cost(problem, orient)
        if times is None:
            continue
        if cost < best.cost - TOL:
            best = DtpSolution(cost, tuple(times), orient)
    if best.cost <= TOL:
        best = DtpSolution(0.0, best.times, best.orientation)
    return best


# ----------------------------------------------------------------------------
# export


def big_m(problem: DisjunctiveTemporalProblem) -> float:
    consts = [c for _, c in problem.lower_bounds]
    consts += [c for _, _, c in problem.diffs + problem.soft_diffs]
    consts += [c for a, b in problem.disjunctions for _, _, c in a + b]
    dues = [d for _, d in problem.due_dates]
    return sum(abs(c) for c in consts) + max([abs(d) for d in dues], default=0.0) + 1.0


def _var_name(problem: DisjunctiveTemporalProblem, v: int) -> str:
    return problem.names[v] if problem.names else f"t{v}"


def to_lp(problem: DisjunctiveTemporalProblem) -> str:
    """CPLEX-LP text: minimise ``s`` with one binary ``k<i>`` per disjunction."""
    M = big_m(problem)
    name = lambda v: _var_name(problem, v)  # noqa: E731
    lines = ["\\ min max lateness, big-M = %.17g" % M, "Minimize", " obj: s", "Subject To"]
    r = 0

    def row(expr: str, rhs: float) -> None:
        nonlocal r
        lines.append(f" c{r}: {expr} >= {rhs:.17g}")
        r += 1

    for v, c in problem.lower_bounds:
        row(f"{name(v)}", c)
    for v, w, c in problem.diffs:
        row(f"{name(v)} - {name(w)}", c)
    for v, d in problem.due_dates:
        row(f"s - {name(v)}", -d)
    for v, w, c in problem.soft_diffs:
        row(f"s - {name(v)} + {name(w)}", -c)
    for k, (a, b) in enumerate(problem.disjunctions):
        for v, w, c in a:
            row(f"{name(v)} - {name(w)} - {M:.17g} k{k}", c - M)
        for v, w, c in b:
            row(f"{name(v)} - {name(w)} + {M:.17g} k{k}", c)
    lines.append("Bounds")
    lines.append(" s >= 0")
    for v in range(problem.var_count):
        lines.append(f" {name(v)} >= 0")
    if problem.disjunctions:
        lines.append("Binary")
        lines.extend(f" k{k}" for k in range(len(problem.disjunctions)))
    lines.append("End")
    return "\n".join(lines) + "\n"


def to_milp_arrays(problem: DisjunctiveTemporalProblem):
    """Dense ``(c, A, lb_row, integrality, upper)`` of the big-M model.

    Variable order: times, then ``s``, then one binary per disjunction.  Rows
    read ``A @ z >= lb_row``.
    """
    import numpy as np

    n, k = problem.var_count, len(problem.disjunctions)
    M = big_m(problem)
    nz = n + 1 + k
    s = n
    rows, rhs = [], []

    def add(coefs: dict[int, float], b: float) -> None:
        r = np.zeros(nz)
        for i, x in coefs.items():
            r[i] += x
        rows.append(r)
        rhs.append(b)

    for v, c in problem.lower_bounds:
        add({v: 1.0}, c)
    for v, w, c in problem.diffs:
        add({v: 1.0, w: -1.0}, c)
    for v, d in problem.due_dates:
        add({s: 1.0, v: -1.0}, -d)
    for v, w, c in problem.soft_diffs:
        add({s: 1.0, v: -1.0, w: 1.0}, -c)
    for j, (a, b) in enumerate(problem.disjunctions):
        for v, w, c in a:
            add({v: 1.0, w: -1.0, n + 1 + j: -M}, c - M)
        for v, w, c in b:
            add({v: 1.0, w: -1.0, n + 1 + j: M}, c)
    cost = np.zeros(nz)
    cost[s] = 1.0
    A = np.array(rows).reshape(-1, nz)
    integrality = np.zeros(nz)
    integrality[n + 1 :] = 1
    upper = np.full(nz, np.inf)
    upper[n + 1 :] = 1.0
    return cost, A, np.array(rhs), integrality, upper
