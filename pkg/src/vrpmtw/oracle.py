"""Exhaustive ground-truth evaluators used by the test suite.

Everything here trades speed for obviousness: window assignments are
enumerated outright and route starts are tried from a finite candidate set.
These functions share no logic with the incremental evaluators in
``schedule``; they exist to check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .model import Instance, Solution

INFEASIBLE = math.inf


@dataclass
class AssignmentSchedule:
    """Witness for one route: chosen window per stop, start time, duration."""
    window_choice: List[int]
    route_start: float
    duration: float


def _route_arrays(instance: Instance, route: Sequence[int]):
    r = np.asarray(route, dtype=np.int64)
    wlo = instance.win_lo[r]
    whi = instance.win_hi[r]
    wcnt = instance.win_cnt[r]
    srv = instance.service[r]
    legs = np.empty(len(r) + 1, dtype=np.float64)
    prev = 0
    for k, v in enumerate(r):
        legs[k] = instance.travel[prev, v]
        prev = v
    legs[len(r)] = instance.travel[prev, 0]
    return wlo, whi, wcnt, srv, legs


@njit(cache=True)
def _scan_assignments(wlo, whi, wcnt, srv, legs, dep_lo, h_cap):
    """Try every window assignment at its latest feasible route start.

    For a fixed assignment the end arrival is nondecreasing in the start
    (waiting only ever shrinks), so duration is nonincreasing in the start
    and the minimum sits at the latest start the upper bounds allow. That
    start comes from a backward min-chain over the window uppers; a forward
    propagation then checks the lower bounds and prices the schedule. The
    1e-9 clamp absorbs summation-order noise when a window upper is exactly
    binding. Returns (duration, best window choice, best start); duration is
    inf when no assignment admits a schedule.
    """
    m = wlo.shape[0]
    best = np.inf
    best_choice = np.zeros(m, np.int64)
    best_start = np.nan
    if m == 0:
        if legs[0] <= h_cap - dep_lo:
            return legs[0], best_choice, dep_lo
        return np.inf, best_choice, best_start

    choice = np.zeros(m, np.int64)
    # stops 0..m-1 are the customers, stop m is the end depot
    lo = np.empty(m + 1)
    hi = np.empty(m + 1)
    sv = np.empty(m + 1)
    for k in range(m):
        sv[k] = srv[k]
    lo[m] = dep_lo
    hi[m] = h_cap
    sv[m] = 0.0

    while True:
        for k in range(m):
            lo[k] = wlo[k, choice[k]]
            hi[k] = whi[k, choice[k]]
        # latest feasible service start per stop, chained from the end
        latest = h_cap
        ok = True
        for k in range(m - 1, -1, -1):
            latest = latest - sv[k] - legs[k + 1]
            if hi[k] < latest:
                latest = hi[k]
        tau = latest - legs[0]
        if tau < dep_lo:
            tau = dep_lo  # propagation below is the arbiter for this edge
        now = tau
        prev_srv = 0.0
        for k in range(m + 1):
            arr = now + prev_srv + legs[k]
            a = arr if arr > lo[k] else lo[k]
            if a > hi[k]:
                if a <= hi[k] + 1e-9:
                    a = hi[k]
                else:
                    ok = False
                    break
            now = a
            prev_srv = sv[k]
        if ok:
            dur = now - tau
            if dur < best:
                best = dur
                best_start = tau
                for k in range(m):
                    best_choice[k] = choice[k]
        # next assignment (mixed-radix increment)
        k = 0
        while k < m:
            choice[k] += 1
            if choice[k] < wcnt[k]:
                break
            choice[k] = 0
            k += 1
        if k == m:
            break
    return best, best_choice, best_start


def oracle_min_duration(instance: Instance, route: Sequence[int],
                        with_schedule: bool = False, guard: int = 1_000_000):
    """Minimal route duration over all window assignments and start times.

    Returns inf for an infeasible route. With ``with_schedule`` the result is
    a (duration, AssignmentSchedule or None) pair.
    """
    combos = 1
    for v in route:
        combos *= int(instance.win_cnt[v])
        if combos > guard:
            raise ValueError(f"assignment enumeration exceeds guard ({guard})")
    wlo, whi, wcnt, srv, legs = _route_arrays(instance, route)
    dur, choice, start = _scan_assignments(wlo, whi, wcnt, srv, legs,
                                           instance.depot_window.lower,
                                           instance.horizon_cap)
    if not with_schedule:
        return float(dur)
    if math.isinf(dur):
        return float(dur), None
    return float(dur), AssignmentSchedule(list(map(int, choice)), float(start), float(dur))


def propagate(instance: Instance, route: Sequence[int], window_choice: Sequence[int],
              route_start: float):
    """Earliest service starts for a fixed assignment and start, or None."""
    t = instance.travel
    s = instance.service
    now = route_start
    prev = 0
    starts = []
    for v, p in zip(route, window_choice):
        w = instance.visits[v].windows[p]
        arr = now + s[prev] + t[prev, v]
        a = max(arr, w.lower)
        if a > w.upper + 1e-12:
            return None
        starts.append(a)
        now = a
        prev = v
    end = now + s[prev] + t[prev, 0]
    if end > instance.horizon_cap + 1e-12 or route_start < instance.depot_window.lower - 1e-12:
        return None
    return starts, end


def _arc_delta(instance: Instance, route: Sequence[int], position: int, visit: int) -> float:
    c = instance.arc_cost
    i = route[position - 1] if position > 0 else 0
    j = route[position] if position < len(route) else 0
    return float(c[i, visit] + c[visit, j] - c[i, j])


def oracle_cheapest_insertion(instance: Instance, route: Sequence[int], position: int,
                              visit: int, b: bool) -> float:
    """Cost delta of inserting ``visit`` before index ``position`` of ``route``.

    Materialises the new route and re-evaluates it from scratch. For the
    time-minimisation variant the delta is (new duration - old duration) plus
    the arc-cost delta; otherwise it is the arc-cost delta alone. Returns inf
    when the new route admits no schedule.
    """
    new_route = list(route[:position]) + [visit] + list(route[position:])
    dur_after = oracle_min_duration(instance, new_route)
    if math.isinf(dur_after):
        return INFEASIBLE
    if not b:
        return _arc_delta(instance, route, position, visit)
    dur_before = oracle_min_duration(instance, route)
    return (dur_after - dur_before) + _arc_delta(instance, route, position, visit)


# -- exhaustive optimum for small instances -------------------------------------


def exhaustive_optimum(instance: Instance, b: Optional[bool] = None,
                       guard_nodes: int = 2_000_000) -> Tuple[float, Solution]:
    """Optimal objective over every partition of the visits into routes.

    Enumerates all arrangements (ordered routes) with prefix-feasibility
    pruning, records the best cost per visit subset, then solves a partition
    DP over subsets. Intended for n <= 9.
    """
    b = instance.minimise_time if b is None else b
    m = instance.n - 1
    nodes = 0
    total = 0
    perm = 1
    for k in range(m):
        perm *= m - k
        total += perm  # exact count of arrangements of the m visits
    if total > guard_nodes:
        raise ValueError(f"{total} arrangements exceed guard ({guard_nodes})")

    full = (1 << m) - 1
    best_route = np.full(full + 1, np.inf)
    best_route_seq: dict = {}
    t = instance.travel
    c = instance.arc_cost
    cap = instance.vehicle_capacity

    def extend(seq, mask, load, dist_open):
        nonlocal nodes
        for v in range(1, m + 1):
            bit = 1 << (v - 1)
            if mask & bit:
                continue
            if load + instance.demand[v] > cap + 1e-9:
                continue
            seq.append(v)
            if _prefix_feasible(instance, seq):
                nodes += 1
                nmask = mask | bit
                prev = seq[-2] if len(seq) > 1 else 0
                ndist = dist_open + c[prev, v]
                cost = ndist + c[v, 0] + instance.vehicle_cost
                if b:
                    dur = oracle_min_duration(instance, seq)
                    if math.isinf(dur):
                        cost = np.inf
                    else:
                        travel_sum = t[0, seq[0]] + sum(
                            t[seq[i], seq[i + 1]] for i in range(len(seq) - 1)) + t[seq[-1], 0]
                        cost += dur - travel_sum
                if cost < best_route[nmask]:
                    best_route[nmask] = cost
                    best_route_seq[nmask] = list(seq)
                extend(seq, nmask, load + instance.demand[v], ndist)
            seq.pop()

    extend([], 0, 0.0, 0.0)

    dp = np.full(full + 1, np.inf)
    dp_pick = np.zeros(full + 1, dtype=np.int64)
    dp[0] = 0.0
    for mask in range(1, full + 1):
        low = mask & -mask
        sub = mask
        while sub:
            if sub & low and math.isfinite(best_route[sub]):
                cand = best_route[sub] + dp[mask ^ sub]
                if cand < dp[mask]:
                    dp[mask] = cand
                    dp_pick[mask] = sub
            sub = (sub - 1) & mask
    if not math.isfinite(dp[full]):
        raise ValueError("no feasible partition exists")

    routes = []
    mask = full
    while mask:
        sub = int(dp_pick[mask])
        routes.append(best_route_seq[sub])
        mask ^= sub
    return float(dp[full]), Solution(routes=routes)


def _prefix_feasible(instance: Instance, seq) -> bool:
    now = instance.depot_window.lower
    prev = 0
    t = instance.travel
    s = instance.service
    for v in seq:
        arr = now + s[prev] + t[prev, v]
        ok = False
        for w in instance.visits[v].windows:
            if arr <= w.upper:
                now = max(arr, w.lower)
                ok = True
                break
        if not ok:
            return False
        prev = v
    return now + s[prev] + t[prev, 0] <= instance.horizon_cap
