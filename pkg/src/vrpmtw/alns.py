"""Adaptive large neighbourhood search over the delta evaluators.

The search runs in four steps: a randomized greedy construction, an online
temperature-tuning phase (improving moves only), a route-minimisation phase
under inflated route/unassigned penalties, and a final optimisation phase
under the original costs. Destroy and repair operators are drawn by roulette
selection over adaptive weights; simulated-annealing acceptance uses the
relative-worsening rule r < exp((delta/cost) * tau) with tau < 0.

All randomness flows through one numpy Generator, so a fixed seed plus the
fixed-iteration termination mode reproduces runs bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import schedule as sched
from .model import Instance, Solution, evaluate_objective, validate_solution

DESTROY_OPS = ("random", "cluster-1", "cluster-2", "cluster-4",
               "geometric", "time", "history")
REPAIR_OPS = ("regret-2", "regret-2-rand")
TOGGLES = DESTROY_OPS + REPAIR_OPS + ("temperature-tuning", "implicit-time-windows")


@dataclass
class SearchConfig:
    n_iter_tt: int = 1000
    dcost_init: float = 10.0
    dcost_end: float = 3.0
    score_accept: float = 2.0    # candidate accepted but not improving
    score_improve: float = 4.0   # candidate improves the current solution
    score_best: float = 10.0     # candidate is a new phase best
    decay: float = 0.9
    removal_min: int = 10
    removal_max: int = 40
    p_unassigned: float = 10_000.0
    p_route: float = 1_000_000.0
    time_budget: float = 60.0
    iterations: Optional[int] = None     # fixed-iteration mode when set
    route_min_fraction: float = 0.10
    seed: int = 0
    minimise_time: bool = False
    disable: Tuple[str, ...] = ()
    fixed_tau: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay {self.decay} outside [0,1]")
        if self.removal_min < 1 or self.removal_max < self.removal_min:
            raise ValueError("removal range must satisfy 1 <= min <= max")
        for name in self.disable:
            if name not in TOGGLES:
                raise ValueError(f"unknown component {name!r}; known: {', '.join(TOGGLES)}")


PRESETS = {
    "b0": dict(n_iter_tt=5000, dcost_init=300.00, dcost_end=2.33,
               score_accept=4, score_improve=15, score_best=17, decay=0.75),
    "b1": dict(n_iter_tt=1600, dcost_init=26.00, dcost_end=5.50,
               score_accept=2, score_improve=8, score_best=16, decay=0.83),
    "default": dict(n_iter_tt=1000, dcost_init=10.0, dcost_end=3.0,
                    score_accept=2, score_improve=4, score_best=10, decay=0.9),
}


def make_config(minimise_time: bool, preset: Optional[str] = None, **overrides) -> SearchConfig:
    """Config from a named preset ('b0', 'b1', 'default'); the preset defaults
    to the variant-specific one. Field overrides win."""
    if preset is None:
        preset = "b1" if minimise_time else "b0"
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
    kw = dict(PRESETS[preset])
    kw["minimise_time"] = minimise_time
    kw.update(overrides)
    return SearchConfig(**kw)


# -- adaptive operator selection ---------------------------------------------------


OUTCOME_REJECTED = "rejected"
OUTCOME_ACCEPTED = "accepted"
OUTCOME_IMPROVING = "improving"
OUTCOME_BEST = "best"


@dataclass
class OperatorBank:
    """Destroy or repair operators with adaptive weights, floor 1."""
    names: List[str]
    scores: Dict[str, float]
    decay: float
    weights: List[float] = field(default_factory=list)
    uses: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            raise ValueError("operator bank is empty")
        if not self.weights:
            self.weights = [1.0] * len(self.names)
        self.uses = [0] * len(self.names)

    def select(self, rng) -> str:
        w = np.asarray(self.weights)
        idx = int(rng.choice(len(self.names), p=w / w.sum()))
        self.uses[idx] += 1
        return self.names[idx]

    def update(self, name: str, outcome: str):
        sc = self.scores[outcome]
        i = self.names.index(name)
        w = self.weights[i] * self.decay + sc * (1.0 - self.decay)
        self.weights[i] = max(1.0, w)


def select_operator(bank: OperatorBank, rng) -> str:
    return bank.select(rng)


def update_weight(bank: OperatorBank, name: str, outcome: str):
    bank.update(name, outcome)


# -- temperature --------------------------------------------------------------------


@dataclass
class Temperature:
    tau_start: float
    tau_end: float
    cost_init: float
    tau_current: float = 0.0

    def __post_init__(self):
        if self.tau_current == 0.0:
            self.tau_current = self.tau_start

    def at_fraction(self, f: float) -> float:
        """Geometric interpolation from tau_start to tau_end; f in [0,1]."""
        f = min(1.0, max(0.0, f))
        self.tau_current = self.tau_start * (self.tau_end / self.tau_start) ** f
        return self.tau_current


def temperature_from_cost(cost_init: float, dcost_init: float, dcost_end: float) -> Temperature:
    """tau = log(0.5) * cost / dcost: a worsening of dcost on a solution of
    cost cost_init is accepted with probability one half."""
    tau_s = math.log(0.5) * cost_init / dcost_init
    tau_e = math.log(0.5) * cost_init / dcost_end
    return Temperature(tau_s, tau_e, cost_init)


def accept(candidate_cost: float, current_cost: float, tau: float, rng) -> bool:
    """Metropolis-style rule on the relative worsening; tau is negative."""
    delta = candidate_cost - current_cost
    if delta <= 0.0:
        return True
    return rng.random() < math.exp((delta / current_cost) * tau)


def route_min_threshold(elapsed_fraction: float) -> int:
    """Unassigned visits tolerated while minimising routes, by time left."""
    percent_left = 100.0 * (1.0 - elapsed_fraction)
    return int(min(5, max(0, math.floor(percent_left / 10.0) - 2)))


# -- edge history --------------------------------------------------------------------


class EdgeHistory:
    """Best observed full-solution cost per directed edge; entries only drop."""

    def __init__(self):
        self.best: Dict[Tuple[int, int], float] = {}

    def observe(self, routes: Sequence[Sequence[int]], cost: float):
        best = self.best
        for route in routes:
            prev = 0
            for v in route:
                e = (prev, v)
                if cost < best.get(e, math.inf):
                    best[e] = cost
                prev = v
            if route:
                e = (prev, 0)
                if cost < best.get(e, math.inf):
                    best[e] = cost

    def edge_cost(self, a: int, b: int) -> float:
        return self.best.get((a, b), math.inf)


# -- insertion cache ------------------------------------------------------------------


class InsertionCache:
    """Lazy per-(visit, route) insertion results, invalidated per route.

    Routes carry a monotonically increasing stamp; entries remember the stamp
    they were computed at and silently expire when it moves on.
    """

    def __init__(self):
        self.entries: Dict[int, Dict[int, tuple]] = {}
        self.hits = 0
        self.misses = 0

    def get(self, visit: int, route: "_Route"):
        slot = self.entries.get(route.rid)
        if slot is not None:
            rec = slot.get(visit)
            if rec is not None and rec[0] == route.stamp:
                self.hits += 1
                return rec[1]
        self.misses += 1
        return None

    def put(self, visit: int, route: "_Route", result):
        self.entries.setdefault(route.rid, {})[visit] = (route.stamp, result)

    def invalidate(self, route: "_Route"):
        self.entries.pop(route.rid, None)

    def on_insert(self, route: "_Route"):
        self.invalidate(route)

    def drop_route(self, route: "_Route"):
        self.entries.pop(route.rid, None)


# -- search state ----------------------------------------------------------------------


class _Route:
    __slots__ = ("rid", "seq", "load", "stamp", "state", "committed",
                 "dist", "travel", "dur", "dirty")

    def __init__(self, rid):
        self.rid = rid
        self.seq: List[int] = []
        self.load = 0.0
        self.stamp = 0
        self.state = None
        self.committed: Optional[List[int]] = None
        self.dist = 0.0
        self.travel = 0.0
        self.dur = 0.0
        self.dirty = False

    def snapshot(self):
        return (self.rid, tuple(self.seq), self.load, self.stamp, self.state,
                None if self.committed is None else tuple(self.committed),
                self.dist, self.travel, self.dur)

    @staticmethod
    def restore(snap) -> "_Route":
        r = _Route(snap[0])
        (r.rid, seq, r.load, r.stamp, r.state, committed,
         r.dist, r.travel, r.dur) = snap
        r.seq = list(seq)
        r.committed = None if committed is None else list(committed)
        return r


@dataclass
class SearchStats:
    seed: int = 0
    iterations_tuning: int = 0
    iterations_route_min: int = 0
    iterations_optimise: int = 0
    accepted: int = 0
    rejected: int = 0
    improving: int = 0
    new_best: int = 0
    tau_start: float = 0.0
    tau_end: float = 0.0
    cost_init: float = 0.0
    cache_hits: int = 0
    cache_misses: int = 0
    wall_time: float = 0.0
    trace: List[tuple] = field(default_factory=list)       # (phase, iter, clock, best)
    weight_rows: List[tuple] = field(default_factory=list)  # (phase, iter, kind, name, weight)
    operator_rows: List[tuple] = field(default_factory=list)  # (kind, name, uses, weight)

    @property
    def iterations_total(self) -> int:
        return self.iterations_route_min + self.iterations_optimise

    def to_csv(self) -> str:
        lines = ["kind,phase,iter,name,value,extra"]
        lines.append(f"meta,,,seed,{self.seed},")
        lines.append(f"meta,,,tau_start,{self.tau_start},")
        lines.append(f"meta,,,tau_end,{self.tau_end},")
        lines.append(f"meta,,,cost_init,{self.cost_init},")
        lines.append(f"meta,,,wall_time,{self.wall_time},")
        for ph, n in (("tuning", self.iterations_tuning),
                      ("route_min", self.iterations_route_min),
                      ("optimise", self.iterations_optimise)):
            lines.append(f"phase,{ph},,iterations,{n},")
        total = max(1, self.accepted + self.rejected)
        lines.append(f"meta,,,acceptance_rate,{self.accepted / total},")
        lines.append(f"meta,,,cache_hits,{self.cache_hits},")
        lines.append(f"meta,,,cache_misses,{self.cache_misses},")
        for ph, it, clock, best in self.trace:
            lines.append(f"trace,{ph},{it},best_cost,{best},{clock}")
        for ph, it, kind, name, w in self.weight_rows:
            lines.append(f"weight,{ph},{it},{kind}:{name},{w},")
        for kind, name, uses, w in self.operator_rows:
            lines.append(f"operator,,,{kind}:{name},{w},{uses}")
        return "\n".join(lines) + "\n"


class Search:
    """One seeded search run over an immutable instance."""

    def __init__(self, instance: Instance, config: SearchConfig):
        self.instance = instance
        self.cfg = config
        self.b = config.minimise_time
        self.rng = np.random.default_rng(config.seed)
        self.fixed_windows = "implicit-time-windows" in config.disable
        destroys = [d for d in DESTROY_OPS if d not in config.disable]
        repairs = [r for r in REPAIR_OPS if r not in config.disable]
        scores = {OUTCOME_REJECTED: 1.0, OUTCOME_ACCEPTED: config.score_accept,
                  OUTCOME_IMPROVING: config.score_improve, OUTCOME_BEST: config.score_best}
        self.destroy_bank = OperatorBank(destroys, scores, config.decay)
        self.repair_bank = OperatorBank(repairs, scores, config.decay)
        self.routes: List[_Route] = []
        self.unassigned: List[int] = []
        self.history = EdgeHistory()
        self.cache = InsertionCache()
        self.stats = SearchStats(seed=config.seed)
        self._counter = 0
        self._singleton: Dict[int, tuple] = {}
        self.phase = "route_min"
        self.temperature: Optional[Temperature] = None
        self.t0 = 0.0
        self.t_main = 0.0
        self._iter = 0
        self.best_cost = math.inf
        self.best_snap = None

    # -- bookkeeping helpers --

    def _next_id(self) -> int:
        self._counter += 1
        return self._counter

    def _mark(self, route: _Route):
        """Mutation bookkeeping: new stamp now, state recomputed on demand."""
        route.stamp = self._next_id()
        route.dirty = True
        self.cache.invalidate(route)

    def _ensure(self, route: _Route):
        if not route.dirty:
            return
        ins = self.instance
        seq = route.seq
        c = ins.arc_cost
        t = ins.travel
        dist = trav = 0.0
        prev = 0
        for v in seq:
            dist += c[prev, v]
            trav += t[prev, v]
            prev = v
        dist += c[prev, 0]
        trav += t[prev, 0]
        route.dist = float(dist)
        route.travel = float(trav)
        if self.b:
            st = sched.build_labels(ins, seq, committed=route.committed)
            if not st.feasible:
                raise AssertionError(f"rebuilt an infeasible route {seq}")
            route.state = st
            route.dur = st.duration
        else:
            st = sched.update_slacks(ins, seq, committed=route.committed)
            if not st.feasible:
                raise AssertionError(f"rebuilt an infeasible route {seq}")
            route.state = st
            route.dur = 0.0
        route.dirty = False

    def _new_route(self) -> _Route:
        r = _Route(self._next_id())
        if self.fixed_windows:
            r.committed = []
        self.routes.append(r)
        return r

    def _drop_route(self, route: _Route):
        self.cache.drop_route(route)
        self.routes.remove(route)

    # -- cost views --

    def assigned_count(self) -> int:
        return sum(len(r.seq) for r in self.routes)

    def base_cost(self) -> float:
        """Objective without penalties or vehicle terms: distance plus, for
        the time variant, service and waiting."""
        for r in self.routes:
            self._ensure(r)
        dist = sum(r.dist for r in self.routes)
        if not self.b:
            return dist
        return dist + sum(r.dur - r.travel for r in self.routes)

    def original_cost(self) -> float:
        return self.base_cost() + self.instance.vehicle_cost * len(self.routes)

    def phase_cost(self) -> float:
        if self.phase == "optimise":
            return self.original_cost() + self.cfg.p_unassigned * len(self.unassigned)
        return (self.base_cost() + self.cfg.p_route * len(self.routes)
                + self.cfg.p_unassigned * len(self.unassigned))

    # -- snapshots --

    def snapshot(self):
        for r in self.routes:
            self._ensure(r)
        return ([r.snapshot() for r in self.routes], tuple(self.unassigned))

    def restore(self, snap):
        routes, unassigned = snap
        self.routes = [_Route.restore(s) for s in routes]
        self.unassigned = list(unassigned)

    # -- insertion evaluation --

    def _singleton_eval(self, visit: int):
        """(rank, win) of a new one-visit route, vehicle cost excluded;
        None when even a singleton route is infeasible."""
        hit = self._singleton.get(visit)
        if hit is not None:
            return hit if hit != () else None
        ins = self.instance
        res = None
        if ins.demand[visit] <= ins.vehicle_capacity:
            dist = float(ins.arc_cost[0, visit] + ins.arc_cost[visit, 0])
            if self.b:
                st = sched.build_labels(ins, [visit])
                if st.feasible:
                    trav = float(ins.travel[0, visit] + ins.travel[visit, 0])
                    _, stops = sched.min_route_duration(ins, [visit], state=st)
                    res = (dist + st.duration - trav, stops[0].window_index)
            else:
                empty = sched.update_slacks(ins, [])
                feas = sched.feasible_insertion_b0(ins, empty, 0, visit)
                if feas.any():
                    res = (dist, int(np.flatnonzero(feas)[0]))
        self._singleton[visit] = res if res is not None else ()
        return res

    def _eval_insertion(self, visit: int, route: _Route):
        """(rank, pos, win) or None; rank is the objective delta excluding
        vehicle and unassigned terms."""
        cached = self.cache.get(visit, route)
        if cached is not None:
            return cached if cached != () else None
        self._ensure(route)
        ins = self.instance
        if route.load + ins.demand[visit] > ins.vehicle_capacity:
            res = None
        elif self.b:
            got = sched.best_insertion_b1(ins, route.state, visit)
            res = None if got is None else (got[0], got[1], got[2])
        else:
            got = sched.best_insertion_b0(ins, route.state, visit)
            if got is None:
                res = None
            else:
                win = 0
                if self.fixed_windows:
                    feas = sched.feasible_insertion_b0(ins, route.state, got[1], visit)
                    win = int(np.flatnonzero(feas)[0])
                res = (got[0], got[1], win)
        self.cache.put(visit, route, res if res is not None else ())
        return res

    def _insert(self, route: _Route, visit: int, pos: int, win: int):
        route.seq.insert(pos, visit)
        route.load += float(self.instance.demand[visit])
        if route.committed is not None:
            route.committed.insert(pos, win)
        self._mark(route)
        self._ensure(route)  # fails fast if the evaluator mispredicted

    def _remove(self, removals: Dict[int, List[int]]):
        """removals: route-list-index -> positions (any order)."""
        for ridx, positions in removals.items():
            route = self.routes[ridx]
            for pos in sorted(positions, reverse=True):
                v = route.seq.pop(pos)
                if route.committed is not None:
                    route.committed.pop(pos)
                route.load -= float(self.instance.demand[v])
                self.unassigned.append(v)
            self._mark(route)
        for route in [self.routes[i] for i in sorted(removals, reverse=True)]:
            if not route.seq:
                self._drop_route(route)

    def _assigned_triples(self) -> List[tuple]:
        out = []
        for ridx, r in enumerate(self.routes):
            for pos, v in enumerate(r.seq):
                out.append((ridx, pos, v))
        return out

    # -- destroy operators --

    def destroy_random(self, q: int) -> List[int]:
        triples = self._assigned_triples()
        q = min(q, len(triples))
        if q == 0:
            return []
        picked = self.rng.choice(len(triples), size=q, replace=False)
        removals: Dict[int, List[int]] = {}
        removed = []
        for k in picked:
            ridx, pos, v = triples[int(k)]
            removals.setdefault(ridx, []).append(pos)
            removed.append(v)
        self._remove(removals)
        return removed

    def destroy_cluster(self, q: int, y: int) -> List[int]:
        removed = []
        while len(removed) < q:
            triples = self._assigned_triples()
            if not triples:
                break
            ridx, pos, v = triples[int(self.rng.integers(len(triples)))]
            span = list(range(pos, min(pos + y + 1, len(self.routes[ridx].seq))))
            removed.extend(self.routes[ridx].seq[p] for p in span)
            self._remove({ridx: span})
        return removed

    def _destroy_ranked(self, q: int, key_of) -> List[int]:
        """Shared loop of the geometric/time/history destroys: repeatedly rank
        the remaining visits and drop the floor(r^4 * n)'th one."""
        removed = []
        triples = self._assigned_triples()
        if not triples:
            return removed
        first = triples[int(self.rng.integers(len(triples)))]
        removed.append(first[2])
        self._remove({first[0]: [first[1]]})
        while len(removed) < q:
            triples = self._assigned_triples()
            if not triples:
                break
            keys = key_of(removed, triples)
            order = np.argsort(keys, kind="stable")
            r = self.rng.random()
            idx = int(order[int(r ** 4 * len(order))])
            ridx, pos, v = triples[idx]
            removed.append(v)
            self._remove({ridx: [pos]})
        return removed

    def destroy_geometric(self, q: int) -> List[int]:
        t = self.instance.travel

        def key_of(removed, triples):
            v_sel = removed[int(self.rng.integers(len(removed)))]
            return np.array([t[v_sel, v] for _, _, v in triples])

        return self._destroy_ranked(q, key_of)

    def destroy_time(self, q: int) -> List[int]:
        starts = self._start_times()

        def key_of(removed, triples):
            v_sel = removed[int(self.rng.integers(len(removed)))]
            ref = starts[v_sel]
            return np.array([abs(starts[v] - ref) for _, _, v in triples])

        return self._destroy_ranked(q, key_of)

    def destroy_history(self, q: int) -> List[int]:
        h = self.history

        def key_of(removed, triples):
            # negate: largest combined edge cost must sort first
            keys = np.empty(len(triples))
            for i, (ridx, pos, v) in enumerate(triples):
                seq = self.routes[ridx].seq
                pre = seq[pos - 1] if pos > 0 else 0
                suc = seq[pos + 1] if pos + 1 < len(seq) else 0
                keys[i] = -(h.edge_cost(pre, v) + h.edge_cost(v, suc))
            return keys

        return self._destroy_ranked(q, key_of)

    def _start_times(self) -> Dict[int, float]:
        """Committed service start per assigned visit: the schedule witness
        for the time variant, earliest starts otherwise."""
        out: Dict[int, float] = {}
        for r in self.routes:
            self._ensure(r)
            if self.b:
                _, stops = sched.min_route_duration(
                    self.instance, r.seq, committed=r.committed, state=r.state)
                for st in stops:
                    out[st.visit] = st.service_start
            else:
                for pos, v in enumerate(r.seq):
                    out[v] = float(r.state.es[pos + 1])
        return out

    def run_destroy(self, name: str, q: int) -> List[int]:
        if name == "random":
            return self.destroy_random(q)
        if name.startswith("cluster-"):
            return self.destroy_cluster(q, int(name.split("-")[1]))
        if name == "geometric":
            return self.destroy_geometric(q)
        if name == "time":
            return self.destroy_time(q)
        if name == "history":
            return self.destroy_history(q)
        raise ValueError(f"unknown destroy operator {name!r}")

    # -- repair operators --

    def repair(self, randomized: bool):
        """Regret-2 insertion of all unassigned visits that fit anywhere.

        Visits are ranked by how much their second-best route insertion loses
        to their best one; the biggest loser goes first. The randomized
        flavour scales every evaluated cost by U[1.0, 1.5] for the ranking
        only; insertions use unperturbed costs.

        Outside the final phase new routes stay forbidden, with one bootstrap
        exception: when a destroy has emptied every route there is nothing to
        insert into, so one route may be opened. Small instances hit this
        whenever the removal quota covers all assigned visits; without the
        exception the all-unassigned state outranks any route under the
        route-minimisation penalties and the search collapses into it.
        """
        pending = list(self.unassigned)
        # Per-visit option tables and (best, second-best) aggregates. Only the
        # route mutated by the previous insertion is re-evaluated each round;
        # aggregates are rescanned only when that route was the incumbent.
        tables: Dict[int, Dict[int, tuple]] = {v: {} for v in pending}
        aggs: Dict[int, list] = {}  # v -> [first_pr, first_rid, second_pr, second_rid]
        changed: Optional[List] = None  # None = evaluate everything
        prev_allow_new = None
        while pending:
            allow_new = self.phase == "optimise" or not self.routes
            lost_new = prev_allow_new is True and not allow_new
            prev_allow_new = allow_new
            if changed is None:
                todo = [(r.rid, r) for r in self.routes]
                if allow_new:
                    todo.append((-1, None))
            else:
                todo = changed
            best_visit = None
            best_regret = -math.inf
            for v in pending:
                slot = tables[v]
                agg = aggs.get(v)
                dirty = agg is None or (lost_new and -1 in (agg[1], agg[3]))
                for rid, route in todo:
                    if rid < 0:
                        if rid in slot:
                            continue
                        res = self._singleton_eval(v)
                        if res is None:
                            rec = (math.inf, math.inf, None, -1, -1)
                        else:
                            rank = res[0] + self.instance.vehicle_cost
                            pr = rank * self.rng.uniform(1.0, 1.5) if randomized else rank
                            rec = (pr, rank, None, 0, res[1])
                    else:
                        res = self._eval_insertion(v, route)
                        if res is None:
                            rec = (math.inf, math.inf, route, -1, -1)
                        else:
                            rank, pos, win = res
                            pr = rank * self.rng.uniform(1.0, 1.5) if randomized else rank
                            rec = (pr, rank, route, pos, win)
                    slot[rid] = rec
                    if not dirty:
                        if rid in (agg[1], agg[3]):
                            dirty = True
                        elif rec[0] < agg[0]:
                            agg[2], agg[3] = agg[0], agg[1]
                            agg[0], agg[1] = rec[0], rid
                        elif rec[0] < agg[2]:
                            agg[2], agg[3] = rec[0], rid
                if dirty:
                    first = second = math.inf
                    frid = srid = None
                    for rid, rec in slot.items():
                        if rid < 0 and not allow_new:
                            continue
                        pr = rec[0]
                        if pr < first:
                            second, srid = first, frid
                            first, frid = pr, rid
                        elif pr < second:
                            second, srid = pr, rid
                    agg = [first, frid, second, srid]
                    aggs[v] = agg
                if agg[0] == math.inf:
                    continue
                regret = agg[2] - agg[0] if agg[2] < math.inf else math.inf
                if regret > best_regret:
                    best_regret = regret
                    best_visit = v
            if best_visit is None:
                break  # nothing insertable; the rest stay unassigned
            # insert by unperturbed cost over the winner's live options
            slot = tables[best_visit]
            best = None
            for rid, rec in slot.items():
                if rid < 0 and not allow_new:
                    continue
                if rec[1] < math.inf and (best is None or rec[1] < best[1]):
                    best = rec
            route, pos, win = best[2], best[3], best[4]
            if route is None:
                route = self._new_route()
                pos = 0
            self._insert(route, best_visit, pos, win)
            pending.remove(best_visit)
            self.unassigned.remove(best_visit)
            del tables[best_visit]
            aggs.pop(best_visit, None)
            changed = [(route.rid, route)]

    def run_repair(self, name: str):
        if name == "regret-2":
            self.repair(randomized=False)
        elif name == "regret-2-rand":
            self.repair(randomized=True)
        else:
            raise ValueError(f"unknown repair operator {name!r}")

    # -- step 1: greedy construction --

    def greedy_construct(self):
        """Insert visits in random order: first route that admits the visit,
        at its best position there; a fresh route when none does."""
        order = self.rng.permutation(np.arange(1, self.instance.n))
        for v in order:
            v = int(v)
            placed = False
            for route in self.routes:
                res = self._eval_insertion(v, route)
                if res is not None:
                    self._insert(route, v, res[1], res[2])
                    placed = True
                    break
            if not placed:
                res = self._singleton_eval(v)
                if res is None:
                    raise ValueError(f"visit {v} cannot be served even by its own route")
                route = self._new_route()
                self._insert(route, v, 0, res[1])

    # -- step 2: temperature tuning --

    def tune_temperature(self) -> Temperature:
        cfg = self.cfg
        if "temperature-tuning" in cfg.disable:
            if cfg.fixed_tau is not None:
                self.temperature = Temperature(cfg.fixed_tau[0], cfg.fixed_tau[1],
                                               self.phase_cost())
            else:
                self.temperature = temperature_from_cost(
                    self.phase_cost(), cfg.dcost_init, cfg.dcost_end)
            self.stats.cost_init = self.temperature.cost_init
            self.stats.tau_start = self.temperature.tau_start
            self.stats.tau_end = self.temperature.tau_end
            return self.temperature
        current = self.phase_cost()
        for _ in range(cfg.n_iter_tt):
            self.stats.iterations_tuning += 1
            q = self._draw_q()
            snap = self.snapshot()
            self._destroy_repair(q)
            cand = self.phase_cost()
            if cand < current:
                current = cand
            else:
                self.restore(snap)
        self.temperature = temperature_from_cost(current, cfg.dcost_init, cfg.dcost_end)
        self.stats.cost_init = current
        self.stats.tau_start = self.temperature.tau_start
        self.stats.tau_end = self.temperature.tau_end
        return self.temperature

    def _draw_q(self) -> int:
        q = int(self.rng.integers(self.cfg.removal_min, self.cfg.removal_max + 1))
        return min(q, self.assigned_count())

    def _destroy_repair(self, q: int) -> Tuple[str, str]:
        d = self.destroy_bank.select(self.rng)
        r = self.repair_bank.select(self.rng)
        self.run_destroy(d, q)
        self.run_repair(r)
        self.history.observe([rt.seq for rt in self.routes], self.original_cost())
        return d, r

    # -- steps 3 and 4 --

    def _fractions(self):
        """(phase fraction of the whole budget, cooling fraction of the
        post-tuning remainder); both equal the iteration fraction in
        fixed-iteration mode."""
        if self.cfg.iterations is not None:
            total = max(1, self.cfg.iterations)
            f = self._iter / total
            return f, f
        now = time.monotonic()
        f_total = (now - self.t0) / self.cfg.time_budget
        span = self.t0 + self.cfg.time_budget - self.t_main
        f_cool = (now - self.t_main) / span if span > 0 else 1.0
        return f_total, f_cool

    def _out_of_budget(self) -> bool:
        if self.cfg.iterations is not None:
            return self._iter >= self.cfg.iterations
        return time.monotonic() - self.t0 >= self.cfg.time_budget

    def optimise(self) -> None:
        """Route-minimisation phase followed by the original-cost phase."""
        cfg = self.cfg
        self.phase = "route_min"
        current = self.phase_cost()
        best_seen = current
        best_feasible = (self.snapshot(), current)
        while not self._out_of_budget():
            self._iter += 1
            f, f_cool = self._fractions()
            tau = self.temperature.at_fraction(f_cool)
            in_route_min = self.phase == "route_min"
            if in_route_min:
                self.stats.iterations_route_min += 1
            else:
                self.stats.iterations_optimise += 1
            q = self._draw_q()
            snap = self.snapshot()
            d_op, r_op = self._destroy_repair(q)
            cand = self.phase_cost()
            outcome = OUTCOME_REJECTED
            if self.phase == "optimise" and self.unassigned:
                self.restore(snap)  # unassigned visits are disallowed here
            elif accept(cand, current, tau, self.rng):
                if cand < best_seen:
                    outcome = OUTCOME_BEST
                    best_seen = cand
                elif cand < current:
                    outcome = OUTCOME_IMPROVING
                else:
                    outcome = OUTCOME_ACCEPTED
                current = cand
            else:
                self.restore(snap)
            if outcome == OUTCOME_REJECTED:
                self.stats.rejected += 1
            else:
                self.stats.accepted += 1
                if outcome == OUTCOME_IMPROVING:
                    self.stats.improving += 1
                elif outcome == OUTCOME_BEST:
                    self.stats.new_best += 1
                    self._trace(best_seen)
            self.destroy_bank.update(d_op, outcome)
            self.repair_bank.update(r_op, outcome)
            if self._iter % 50 == 0:
                self._record_weights()

            if in_route_min:
                if not self.unassigned and current < best_feasible[1]:
                    best_feasible = (self.snapshot(), current)
                if f >= cfg.route_min_fraction:
                    if not self.unassigned:
                        self._enter_optimise()
                        current = self.phase_cost()
                        best_seen = current
                        self._trace(best_seen)
                        continue
                    if len(self.unassigned) > route_min_threshold(f):
                        self.restore(best_feasible[0])
                        self._enter_optimise()
                        current = self.phase_cost()
                        best_seen = current
                        self._trace(best_seen)
                        continue
                if not self.unassigned:
                    self._destroy_smallest_route()
                    current = self.phase_cost()
            elif not self.unassigned and current < self.best_cost:
                self.best_cost = current
                self.best_snap = self.snapshot()
        if self.phase == "route_min":
            # budget ran out while minimising routes; fall back to the best
            # fully assigned solution seen in the phase
            self.restore(best_feasible[0])
            self._enter_optimise()

    def _enter_optimise(self):
        self.phase = "optimise"
        self.best_cost = self.phase_cost()
        self.best_snap = self.snapshot()

    def _destroy_smallest_route(self):
        if not self.routes:
            return
        smallest = min(self.routes, key=lambda r: len(r.seq))
        self._remove({self.routes.index(smallest): list(range(len(smallest.seq)))})

    def _trace(self, best: float):
        clock = self._iter if self.cfg.iterations is not None else time.monotonic() - self.t0
        self.stats.trace.append((self.phase, self._iter, round(clock, 3), best))

    def _record_weights(self):
        for kind, bank in (("destroy", self.destroy_bank), ("repair", self.repair_bank)):
            for name, w in zip(bank.names, bank.weights):
                self.stats.weight_rows.append((self.phase, self._iter, kind, name, w))

    # -- result assembly --

    def solution(self) -> Solution:
        routes = [list(r.seq) for r in self.routes]
        schedules = None
        if self.b:
            schedules = []
            for r in self.routes:
                self._ensure(r)
                _, stops = sched.min_route_duration(
                    self.instance, r.seq, committed=r.committed, state=r.state)
                schedules.append(stops)
        sol = Solution(routes=routes, schedules=schedules,
                       unassigned=frozenset(self.unassigned))
        sol.cost = evaluate_objective(self.instance, sol, b=self.b)
        return sol

    def run(self) -> Tuple[Solution, SearchStats]:
        self.t0 = time.monotonic()
        self.greedy_construct()
        self.tune_temperature()
        self.t_main = time.monotonic()
        self.optimise()
        self.restore(self.best_snap)
        sol = self.solution()
        self.stats.wall_time = time.monotonic() - self.t0
        self.stats.cache_hits = self.cache.hits
        self.stats.cache_misses = self.cache.misses
        for kind, bank in (("destroy", self.destroy_bank), ("repair", self.repair_bank)):
            for name, w, u in zip(bank.names, bank.weights, bank.uses):
                self.stats.operator_rows.append((kind, name, u, w))
        report = validate_solution(self.instance, sol)
        assert not report, f"solver emitted an invalid solution: {report[:3]}"
        return sol, self.stats


def run(instance: Instance, config: SearchConfig) -> Tuple[Solution, SearchStats]:
    """Run one seeded search; returns the best solution and its statistics."""
    if config.minimise_time != instance.minimise_time:
        instance = instance.with_flags(minimise_time=config.minimise_time)
    return Search(instance, config).run()


def tune_temperature(instance: Instance, config: SearchConfig) -> Temperature:
    """Greedy-construct, run the improving-only tuning iterations, and return
    the resulting temperature schedule."""
    s = Search(instance, config)
    s.greedy_construct()
    return s.tune_temperature()
