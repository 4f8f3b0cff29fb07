"""Constant-amortised route evaluation for both problem variants.

Distance variant: earliest/latest service-start recurrences over the window
sets, giving O(|windows|) insertion feasibility checks.

Time-minimisation variant: forward and backward label fronts per position.
A backward label (es, bs, st) says: service here can start at any
a in [es, es + bs] while the route still starts at st + min(a - es, bs);
a forward label (ls, fs, et) mirrors that for the route suffix. Fronts are
kept as Pareto antichains under the dominance rules below, which preserves
the exact minimum because the per-start duration curves of dominated labels
never dip below a dominating label's curve.

Position convention: a route is its customer sequence; insertion position p
means "between stop p and stop p+1" where position 0 is the start depot and
position len(route)+1 is the end depot. Infeasibility is reported as inf (or
an infeasible state), never raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .model import Instance, ScheduledStop

INFEASIBLE = math.inf


# -- shared route-local arrays ---------------------------------------------------


def _route_windows(instance: Instance, route, committed):
    """Window arrays for the route's customer stops, optionally restricted to
    one committed window per stop (the fixed-window evaluation mode)."""
    r = np.asarray(route, dtype=np.int64)
    if committed is None:
        return instance.win_lo[r], instance.win_hi[r], instance.win_cnt[r].copy(), r
    m = len(route)
    wlo = np.empty((m, 1))
    whi = np.empty((m, 1))
    for k in range(m):
        wlo[k, 0] = instance.win_lo[r[k], committed[k]]
        whi[k, 0] = instance.win_hi[r[k], committed[k]]
    return wlo, whi, np.ones(m, dtype=np.int64), r


def _route_legs(instance: Instance, r: np.ndarray) -> np.ndarray:
    legs = np.empty(len(r) + 1)
    prev = 0
    for k, v in enumerate(r):
        legs[k] = instance.travel[prev, v]
        prev = v
    legs[len(r)] = instance.travel[prev, 0]
    return legs


# -- distance variant: slack recurrences ----------------------------------------


@dataclass
class SlackState:
    """Earliest/latest service starts per position (depots included)."""
    route: Tuple[int, ...]
    es: np.ndarray        # earliest service start, positions 0..m+1
    ls: np.ndarray        # latest service start
    es_win: np.ndarray    # window index realising es (customers only)
    feasible: bool
    seq: np.ndarray = None  # the route as an int64 array, for kernel calls


@njit(cache=True)
def _slacks_kernel(wlo, whi, wcnt, srv, legs, dep_lo, h_cap):
    m = wlo.shape[0]
    es = np.full(m + 2, np.inf)
    ls = np.full(m + 2, -np.inf)
    es_win = np.full(m + 2, -1, np.int64)
    es[0] = dep_lo
    feasible = True
    prev_srv = 0.0
    for pos in range(1, m + 2):
        arr = es[pos - 1] + prev_srv + legs[pos - 1]
        if pos <= m:
            found = False
            for p in range(wcnt[pos - 1]):
                if arr <= whi[pos - 1, p]:
                    lo = wlo[pos - 1, p]
                    es[pos] = arr if arr > lo else lo
                    es_win[pos] = p
                    found = True
                    break
            if not found:
                feasible = False
                break
            prev_srv = srv[pos - 1]
        else:
            if arr > h_cap:
                feasible = False
                break
            es[pos] = arr if arr > dep_lo else dep_lo
    if feasible:
        ls[m + 1] = h_cap
        for pos in range(m, -1, -1):
            s_here = srv[pos - 1] if pos >= 1 else 0.0
            lim = ls[pos + 1] - legs[pos] - s_here
            if pos == 0:
                if lim < dep_lo:
                    feasible = False
                    break
                ls[0] = lim if lim < h_cap else h_cap
            else:
                found = False
                for p in range(wcnt[pos - 1] - 1, -1, -1):
                    if wlo[pos - 1, p] <= lim:
                        hi = whi[pos - 1, p]
                        ls[pos] = lim if lim < hi else hi
                        found = True
                        break
                if not found:
                    feasible = False
                    break
    return es, ls, es_win, feasible


def update_slacks(instance: Instance, route: Sequence[int],
                  committed: Optional[Sequence[int]] = None) -> SlackState:
    """Recompute the earliest/latest start state for a route from scratch."""
    wlo, whi, wcnt, r = _route_windows(instance, route, committed)
    legs = _route_legs(instance, r)
    es, ls, es_win, feasible = _slacks_kernel(
        wlo, whi, wcnt, instance.service[r], legs,
        instance.depot_window.lower, instance.horizon_cap)
    return SlackState(tuple(route), es, ls, es_win, bool(feasible), r)


def feasible_insertion_b0(instance: Instance, state: SlackState, position: int,
                          visit: int) -> np.ndarray:
    """Per-window insertion feasibility at a position, from the slack state.

    A window works iff the earliest arrival meets its upper bound, its lower
    bound leaves the successor's latest start reachable, and the
    window-independent band check (earliest arrival still reaches the
    successor in time) holds.
    """
    route = state.route
    m = len(route)
    i = route[position - 1] if position > 0 else 0
    j = route[position] if position < m else 0
    reach = state.es[position] + instance.service[i] + instance.travel[i, visit]
    limit = state.ls[position + 1] - instance.travel[visit, j] - instance.service[visit]
    v = instance.visits[visit]
    out = np.zeros(len(v.windows), dtype=np.bool_)
    if not state.feasible or reach > limit:
        return out
    for p, w in enumerate(v.windows):
        out[p] = (reach <= w.upper) and (w.lower <= limit)
    return out


def delta_distance(instance: Instance, route: Sequence[int], position: int,
                   visit: int) -> float:
    """Arc-cost change of inserting a visit at a position; constant time."""
    c = instance.arc_cost
    i = route[position - 1] if position > 0 else 0
    j = route[position] if position < len(route) else 0
    return float(c[i, visit] + c[visit, j] - c[i, j])


@njit(cache=True)
def _best_insertion_b0_kernel(es, ls, seq, o, olo, ohi, ocnt, srv, T, C):
    m = seq.size
    best = np.inf
    best_pos = -1
    for pos in range(m + 1):
        i = seq[pos - 1] if pos > 0 else 0
        j = seq[pos] if pos < m else 0
        reach = es[pos] + srv[i] + T[i, o]
        limit = ls[pos + 1] - T[o, j] - srv[o]
        if reach > limit:
            continue
        ok = False
        for p in range(ocnt):
            if reach <= ohi[p] and olo[p] <= limit:
                ok = True
                break
        if ok:
            d = C[i, o] + C[o, j] - C[i, j]
            if d < best:
                best = d
                best_pos = pos
    return best, best_pos


def best_insertion_b0(instance: Instance, state: SlackState, visit: int):
    """Cheapest feasible position for a visit, or None. Ties take the
    earliest position."""
    if not state.feasible:
        return None
    seq = state.seq if state.seq is not None else np.asarray(state.route, dtype=np.int64)
    delta, pos = _best_insertion_b0_kernel(
        state.es, state.ls, seq, visit,
        instance.win_lo[visit], instance.win_hi[visit], int(instance.win_cnt[visit]),
        instance.service, instance.travel, instance.arc_cost)
    if pos < 0:
        return None
    return float(delta), int(pos)


# -- labels -----------------------------------------------------------------------


@dataclass(frozen=True)
class BackwardLabel:
    es: float   # earliest service start at this position
    bs: float   # cost-less backward slack: start may slip to es+bs for free
    st: float   # route start achieving service at es


@dataclass(frozen=True)
class ForwardLabel:
    ls: float   # latest service start at this position
    fs: float   # cost-less forward slack
    et: float   # route end when service starts at ls


def expand_backward(label: BackwardLabel, window, t_ji: float, s_j: float
                    ) -> Optional[BackwardLabel]:
    """Extend a predecessor label through one window; None if unreachable.

    Waiting first consumes the inherited slack (start can slip to soak it up),
    and the remaining slack is capped by the window's own upper bound.
    """
    arr = label.es + s_j + t_ji
    if arr > window.upper:
        return None
    wait = max(0.0, window.lower - arr)
    es = arr + wait
    st = label.st + min(label.bs, wait)
    bs = min(max(0.0, label.bs - wait), window.upper - es)
    return BackwardLabel(es, bs, st)


def expand_forward(label: ForwardLabel, window, t_ij: float, s_i: float
                   ) -> Optional[ForwardLabel]:
    """Mirror of expand_backward for route suffixes."""
    lat = label.ls - t_ij - s_i
    if lat < window.lower:
        return None
    gap = max(0.0, lat - window.upper)
    ls = min(lat, window.upper)
    fs = min(max(0.0, label.fs - gap), ls - window.lower)
    et = label.et - min(label.fs, gap)
    return ForwardLabel(ls, fs, et)


def dominates_backward(a: BackwardLabel, b: BackwardLabel) -> bool:
    return a.st + a.bs >= b.st + b.bs and a.es <= b.es


def dominates_forward(a: ForwardLabel, b: ForwardLabel) -> bool:
    return a.et - a.fs <= b.et - b.fs and a.ls >= b.ls


@dataclass
class RouteEvalState:
    """Per-position label fronts, flattened for the kernels.

    Backward labels of position p live in rows bstart[p]:bstart[p]+bcnt[p] of
    bwd (columns es, bs, st), sorted by es ascending; forward labels likewise
    in fwd (columns ls, fs, et), sorted by ls descending. Parent/window rows
    allow witness reconstruction.
    """
    route: Tuple[int, ...]
    bwd: np.ndarray
    bstart: np.ndarray
    bcnt: np.ndarray
    bparent: np.ndarray
    bwin: np.ndarray
    fwd: np.ndarray
    fstart: np.ndarray
    fcnt: np.ndarray
    fparent: np.ndarray
    fwin: np.ndarray
    feasible: bool
    duration: float
    seq: np.ndarray = None  # the route as an int64 array, for kernel calls

    def backward_labels(self, position: int) -> List[BackwardLabel]:
        s, c = self.bstart[position], self.bcnt[position]
        return [BackwardLabel(*self.bwd[k]) for k in range(s, s + c)]

    def forward_labels(self, position: int) -> List[ForwardLabel]:
        s, c = self.fstart[position], self.fcnt[position]
        return [ForwardLabel(*self.fwd[k]) for k in range(s, s + c)]


@njit(cache=True)
def _sort_and_prune(data, par, win, n, key_primary, key_secondary, prune,
                    out, opar, owin, start):
    """Stable sort by (primary asc, secondary asc) then keep labels whose
    secondary key strictly improves; returns the kept count."""
    order1 = np.argsort(key_secondary[:n], kind="mergesort")
    k1 = np.empty(n)
    for i in range(n):
        k1[i] = key_primary[order1[i]]
    order2 = np.argsort(k1, kind="mergesort")
    kept = 0
    best = np.inf
    for i in range(n):
        src = order1[order2[i]]
        sec = key_secondary[src]
        if prune:
            if sec >= best:
                continue
            best = sec
        out[start + kept, 0] = data[src, 0]
        out[start + kept, 1] = data[src, 1]
        out[start + kept, 2] = data[src, 2]
        opar[start + kept] = par[src]
        owin[start + kept] = win[src]
        kept += 1
    return kept


@njit(cache=True)
def _labels_kernel(wlo, whi, wcnt, srv, legs, dep_lo, h_cap, prune, maxl):
    m = wlo.shape[0]
    bwd = np.empty((maxl, 3))
    bparent = np.empty(maxl, np.int64)
    bwin = np.empty(maxl, np.int64)
    bstart = np.zeros(m + 2, np.int64)
    bcnt = np.zeros(m + 2, np.int64)
    fwd = np.empty((maxl, 3))
    fparent = np.empty(maxl, np.int64)
    fwin = np.empty(maxl, np.int64)
    fstart = np.zeros(m + 2, np.int64)
    fcnt = np.zeros(m + 2, np.int64)
    tmp = np.empty((maxl, 3))
    tpar = np.empty(maxl, np.int64)
    twin = np.empty(maxl, np.int64)
    kp = np.empty(maxl)
    ks = np.empty(maxl)
    ok = True
    feasible = True

    # backward sweep, start depot outward
    bwd[0, 0] = dep_lo
    bwd[0, 1] = h_cap - dep_lo
    bwd[0, 2] = dep_lo
    bparent[0] = -1
    bwin[0] = -1
    bstart[0] = 0
    bcnt[0] = 1
    nb = 1
    for pos in range(1, m + 2):
        prev_srv = srv[pos - 2] if pos >= 2 else 0.0
        leg = legs[pos - 1]
        cw = wcnt[pos - 1] if pos <= m else 1
        s0 = bstart[pos - 1]
        nt = 0
        for li in range(s0, s0 + bcnt[pos - 1]):
            esj = bwd[li, 0]
            bsj = bwd[li, 1]
            stj = bwd[li, 2]
            arr = esj + prev_srv + leg
            for p in range(cw):
                if pos <= m:
                    lo = wlo[pos - 1, p]
                    hi = whi[pos - 1, p]
                else:
                    lo = dep_lo
                    hi = h_cap
                if arr > hi:
                    continue
                wait = lo - arr
                if wait < 0.0:
                    wait = 0.0
                es = arr + wait
                st = stj + (bsj if bsj < wait else wait)
                bs = bsj - wait
                if bs < 0.0:
                    bs = 0.0
                capv = hi - es
                if bs > capv:
                    bs = capv
                if nt >= maxl:
                    ok = False
                    break
                tmp[nt, 0] = es
                tmp[nt, 1] = bs
                tmp[nt, 2] = st
                tpar[nt] = li
                twin[nt] = p
                nt += 1
            if not ok:
                break
        if not ok:
            break
        if nt == 0:
            feasible = False
            break
        if nb + nt > maxl:
            ok = False
            break
        for i in range(nt):
            kp[i] = tmp[i, 0]                 # es ascending
            ks[i] = -(tmp[i, 2] + tmp[i, 1])  # st+bs descending
        kept = _sort_and_prune(tmp, tpar, twin, nt, kp, ks, prune,
                               bwd, bparent, bwin, nb)
        bstart[pos] = nb
        bcnt[pos] = kept
        nb += kept

    # forward sweep, end depot inward
    nf = 0
    if ok and feasible:
        fwd[0, 0] = h_cap
        fwd[0, 1] = h_cap - dep_lo
        fwd[0, 2] = h_cap
        fparent[0] = -1
        fwin[0] = -1
        fstart[m + 1] = 0
        fcnt[m + 1] = 1
        nf = 1
        for pos in range(m, -1, -1):
            s_here = srv[pos - 1] if pos >= 1 else 0.0
            leg = legs[pos]
            cw = wcnt[pos - 1] if pos >= 1 else 1
            s0 = fstart[pos + 1]
            nt = 0
            for li in range(s0, s0 + fcnt[pos + 1]):
                lsj = fwd[li, 0]
                fsj = fwd[li, 1]
                etj = fwd[li, 2]
                lat = lsj - leg - s_here
                for p in range(cw):
                    if pos >= 1:
                        lo = wlo[pos - 1, p]
                        hi = whi[pos - 1, p]
                    else:
                        lo = dep_lo
                        hi = h_cap
                    if lat < lo:
                        continue
                    gap = lat - hi
                    if gap < 0.0:
                        gap = 0.0
                    ls = lat if lat < hi else hi
                    fs = fsj - gap
                    if fs < 0.0:
                        fs = 0.0
                    capv = ls - lo
                    if fs > capv:
                        fs = capv
                    et = etj - (fsj if fsj < gap else gap)
                    if nt >= maxl:
                        ok = False
                        break
                    tmp[nt, 0] = ls
                    tmp[nt, 1] = fs
                    tmp[nt, 2] = et
                    tpar[nt] = li
                    twin[nt] = p
                    nt += 1
                if not ok:
                    break
            if not ok:
                break
            if nt == 0:
                feasible = False
                break
            if nf + nt > maxl:
                ok = False
                break
            for i in range(nt):
                kp[i] = -tmp[i, 0]               # ls descending
                ks[i] = tmp[i, 2] - tmp[i, 1]    # et-fs ascending
            kept = _sort_and_prune(tmp, tpar, twin, nt, kp, ks, prune,
                                   fwd, fparent, fwin, nf)
            fstart[pos] = nf
            fcnt[pos] = kept
            nf += kept

    duration = np.inf
    if ok and feasible:
        s, c = bstart[m + 1], bcnt[m + 1]
        for k in range(s, s + c):
            d = bwd[k, 0] - bwd[k, 2]
            if d < duration:
                duration = d
    return (bwd, bparent, bwin, bstart, bcnt, nb,
            fwd, fparent, fwin, fstart, fcnt, nf, feasible, ok, duration)


def _unpruned_bound(wcnt) -> int:
    total = 2  # both depot base labels
    prod = 1
    for c in wcnt:
        prod *= int(c)
        total += prod
        if total > 5_000_000:
            raise ValueError("unpruned label count exceeds 5e6; refuse to allocate")
    run = 1
    for c in wcnt[::-1]:
        run *= int(c)
        total += run
    return total + 16


def build_labels(instance: Instance, route: Sequence[int], prune: bool = True,
                 committed: Optional[Sequence[int]] = None) -> RouteEvalState:
    """Build the per-position label fronts for a route.

    With prune=False the full (sorted, unpruned) label sets are kept; this is
    only for equivalence testing and can be large.
    """
    wlo, whi, wcnt, r = _route_windows(instance, route, committed)
    legs = _route_legs(instance, r)
    srv = instance.service[r]
    dep_lo = instance.depot_window.lower
    h_cap = instance.horizon_cap
    maxl = 64 + 8 * (len(route) + 2) if prune else _unpruned_bound(wcnt)
    while True:
        (bwd, bparent, bwin, bstart, bcnt, nb,
         fwd, fparent, fwin, fstart, fcnt, nf,
         feasible, ok, duration) = _labels_kernel(
            wlo, whi, wcnt, srv, legs, dep_lo, h_cap, prune, maxl)
        if ok:
            break
        maxl *= 4
        if maxl > 50_000_000:
            raise MemoryError("label buffer growth out of control")
    return RouteEvalState(tuple(route), bwd[:nb].copy(), bstart, bcnt,
                          bparent[:nb].copy(), bwin[:nb].copy(),
                          fwd[:nf].copy(), fstart, fcnt,
                          fparent[:nf].copy(), fwin[:nf].copy(),
                          bool(feasible), float(duration), r)


# -- cheapest insertion under optimal window allocation ---------------------------


@njit(cache=True)
def _scan_position(bwd, bs0, bc, fwd, fs0, fc, olo, ohi, ocnt, d_in, d_out):
    """Best new route duration when inserting between two fronts.

    Iterates backward labels (es ascending), the visit's windows, and forward
    labels (ls descending); the sort orders justify the early breaks.
    """
    best = np.inf
    best_win = -1
    max_hi = -np.inf
    for p in range(ocnt):
        if ohi[p] > max_hi:
            max_hi = ohi[p]
    for bi in range(bs0, bs0 + bc):
        arr = bwd[bi, 0] + d_in
        if arr > max_hi:
            break
        bsj = bwd[bi, 1]
        stj = bwd[bi, 2]
        for p in range(ocnt):
            if arr > ohi[p]:
                continue
            lo = olo[p]
            hi = ohi[p]
            wait = lo - arr
            if wait < 0.0:
                wait = 0.0
            es_o = arr + wait
            st_o = stj + (bsj if bsj < wait else wait)
            bs_o = bsj - wait
            if bs_o < 0.0:
                bs_o = 0.0
            capv = hi - es_o
            if bs_o > capv:
                bs_o = capv
            for fi in range(fs0, fs0 + fc):
                lat = fwd[fi, 0] - d_out
                if lat < es_o:
                    break
                fsj = fwd[fi, 1]
                etj = fwd[fi, 2]
                gap = lat - hi
                if gap < 0.0:
                    gap = 0.0
                ls_o = lat if lat < hi else hi
                fs_o = fsj - gap
                if fs_o < 0.0:
                    fs_o = 0.0
                capf = ls_o - lo
                if fs_o > capf:
                    fs_o = capf
                et_o = etj - (fsj if fsj < gap else gap)
                band = ls_o - es_o
                sl = bs_o + fs_o
                if sl > band:
                    sl = band
                nd = et_o - st_o - sl
                if nd < best:
                    best = nd
                    best_win = p
    return best, best_win


@njit(cache=True)
def _best_insertion_b1_kernel(bwd, bstart, bcnt, fwd, fstart, fcnt, seq, o,
                              olo, ohi, ocnt, srv, T, C, old_dur):
    m = seq.size
    best_rank = np.inf
    best_pos = -1
    best_win = -1
    best_nd = np.inf
    for pos in range(m + 1):
        i = seq[pos - 1] if pos > 0 else 0
        j = seq[pos] if pos < m else 0
        d_in = srv[i] + T[i, o]
        d_out = srv[o] + T[o, j]
        nd, win = _scan_position(bwd, bstart[pos], bcnt[pos],
                                 fwd, fstart[pos + 1], fcnt[pos + 1],
                                 olo, ohi, ocnt, d_in, d_out)
        if win >= 0:
            rank = (nd - old_dur) + (C[i, o] + C[o, j] - C[i, j]) \
                - (T[i, o] + T[o, j] - T[i, j])
            if rank < best_rank:
                best_rank = rank
                best_pos = pos
                best_win = win
                best_nd = nd
    return best_rank, best_pos, best_win, best_nd


def cheapest_insertion_b1(instance: Instance, state: RouteEvalState, position: int,
                          visit: int, old_duration: Optional[float] = None) -> float:
    """Best insertion delta at one position: (new duration - old duration)
    plus the arc-cost delta. inf when no label/window combination fits."""
    if not state.feasible:
        return INFEASIBLE
    old = state.duration if old_duration is None else old_duration
    route = state.route
    m = len(route)
    i = route[position - 1] if position > 0 else 0
    j = route[position] if position < m else 0
    d_in = instance.service[i] + instance.travel[i, visit]
    d_out = instance.service[visit] + instance.travel[visit, j]
    nd, win = _scan_position(state.bwd, state.bstart[position], state.bcnt[position],
                             state.fwd, state.fstart[position + 1], state.fcnt[position + 1],
                             instance.win_lo[visit], instance.win_hi[visit],
                             int(instance.win_cnt[visit]), d_in, d_out)
    if win < 0:
        return INFEASIBLE
    return float(nd - old) + delta_distance(instance, route, position, visit)


def best_insertion_b1(instance: Instance, state: RouteEvalState, visit: int):
    """Best position for a visit under the true objective delta.

    Returns (objective_delta, position, window, new_duration) or None. The
    objective delta is the duration change plus any arc-cost/travel split;
    with costs equal to travel times it is exactly the duration change.
    """
    if not state.feasible:
        return None
    seq = state.seq if state.seq is not None else np.asarray(state.route, dtype=np.int64)
    rank, pos, win, nd = _best_insertion_b1_kernel(
        state.bwd, state.bstart, state.bcnt, state.fwd, state.fstart, state.fcnt,
        seq, visit, instance.win_lo[visit], instance.win_hi[visit],
        int(instance.win_cnt[visit]), instance.service,
        instance.travel, instance.arc_cost, state.duration)
    if pos < 0:
        return None
    return float(rank), int(pos), int(win), float(nd)


# -- route duration and witness schedule ------------------------------------------


def min_route_duration(instance: Instance, route: Sequence[int],
                       committed: Optional[Sequence[int]] = None,
                       state: Optional[RouteEvalState] = None):
    """Minimal duration over window assignments and start times, plus one
    witness schedule. Returns (inf, None) for an infeasible route."""
    if state is None:
        state = build_labels(instance, route, committed=committed)
    if not state.feasible:
        return INFEASIBLE, None
    m = len(state.route)
    end = state.bstart[m + 1]
    best_k = -1
    best_d = math.inf
    for k in range(end, end + state.bcnt[m + 1]):
        d = state.bwd[k, 0] - state.bwd[k, 2]
        if d < best_d:
            best_d = d
            best_k = k
    # walk parents for the window choice, then fix starts back-to-front:
    # each stop starts as late as its window and the next departure allow,
    # which realises the minimal duration found by the labels
    chain = []
    k = best_k
    while k >= 0:
        chain.append(k)
        k = state.bparent[k]
    chain.reverse()  # positions 0..m+1
    wins = [int(state.bwin[state_k]) for state_k in chain]
    if committed is not None:
        # the state was built on singleton window sets; map indices back
        wins = [-1] + [int(committed[k]) for k in range(m)] + [0]
    r = list(state.route)
    starts = [0.0] * (m + 1)
    starts[m] = float(state.bwd[best_k, 0])  # end-depot arrival
    for pos in range(m, 0, -1):
        v = r[pos - 1]
        nxt = r[pos] if pos < m else 0
        hi = instance.visits[v].windows[wins[pos]].upper
        latest = starts[pos] - instance.service[v] - instance.travel[v, nxt]
        starts[pos - 1] = min(hi, latest)
    stops = [ScheduledStop(r[k], wins[k + 1], starts[k]) for k in range(m)]
    return float(best_d), stops
