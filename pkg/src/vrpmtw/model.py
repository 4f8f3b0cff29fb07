"""Problem data model: instances, solutions, objective, validation, file formats.

A visit owns several disjoint service time windows; exactly one must be used.
Index 0 is always the depot. Travel times are Euclidean distances computed
from coordinates, and by default arc costs equal travel times and the cost of
using a vehicle equals its capacity (the benchmark convention).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

EPS = 1e-9


@dataclass(frozen=True)
class TimeWindow:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"window lower {self.lower} > upper {self.upper}")

    def contains(self, t: float, eps: float = EPS) -> bool:
        return self.lower - eps <= t <= self.upper + eps


@dataclass(frozen=True)
class Visit:
    id: int
    x: float
    y: float
    demand: float
    service_time: float
    windows: Tuple[TimeWindow, ...]

    def __post_init__(self):
        if not self.windows:
            raise ValueError(f"visit {self.id} has no windows")
        for a, b in zip(self.windows, self.windows[1:]):
            # sorted by lower and pairwise disjoint
            if not a.upper < b.lower:
                raise ValueError(f"visit {self.id} has overlapping windows")


class Instance:
    """Immutable problem instance. Do not mutate after construction.

    visits[0] is the depot; its single window is the planning horizon.
    duration_deadline is the latest end-depot arrival (deadline form); the
    effective horizon cap is min(depot upper, deadline).
    """

    def __init__(self, name: str, visits: Sequence[Visit], vehicle_capacity: float,
                 vehicle_cost: Optional[float] = None, duration_deadline: float = math.inf,
                 minimise_time: bool = False, precision: str = "exact",
                 travel: Optional[np.ndarray] = None, arc_cost: Optional[np.ndarray] = None):
        self.name = name
        self.visits = list(visits)
        if not self.visits:
            raise ValueError("instance has no depot")
        depot = self.visits[0]
        if len(depot.windows) != 1:
            raise ValueError("depot must have exactly one window (the horizon)")
        if depot.service_time != 0 or depot.demand != 0:
            raise ValueError("depot must have zero demand and service time")
        self.vehicle_capacity = float(vehicle_capacity)
        self.vehicle_cost = float(vehicle_capacity if vehicle_cost is None else vehicle_cost)
        self.duration_deadline = float(duration_deadline)
        self.minimise_time = bool(minimise_time)
        self.precision = precision
        self.travel = self._build_travel() if travel is None else np.asarray(travel, dtype=np.float64)
        if self.travel.shape != (self.n, self.n):
            raise ValueError("travel matrix shape mismatch")
        self.arc_cost = self.travel if arc_cost is None else np.asarray(arc_cost, dtype=np.float64)
        self._build_window_arrays()

    # -- construction helpers -------------------------------------------------

    def _build_travel(self) -> np.ndarray:
        xy = np.array([[v.x, v.y] for v in self.visits], dtype=np.float64)
        d = np.hypot(xy[:, 0:1] - xy[:, 0:1].T, xy[:, 1:2] - xy[:, 1:2].T)
        if self.precision != "exact":
            d = np.round(d, int(self.precision))
        np.fill_diagonal(d, 0.0)
        return d

    def _build_window_arrays(self):
        # padded per-visit window arrays for the numeric kernels
        n = self.n
        pmax = max(len(v.windows) for v in self.visits)
        self.win_lo = np.full((n, pmax), np.inf, dtype=np.float64)
        self.win_hi = np.full((n, pmax), -np.inf, dtype=np.float64)
        self.win_cnt = np.zeros(n, dtype=np.int64)
        self.service = np.zeros(n, dtype=np.float64)
        self.demand = np.zeros(n, dtype=np.float64)
        for i, v in enumerate(self.visits):
            self.win_cnt[i] = len(v.windows)
            for p, w in enumerate(v.windows):
                self.win_lo[i, p] = w.lower
                self.win_hi[i, p] = w.upper
            self.service[i] = v.service_time
            self.demand[i] = v.demand

    # -- derived views ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.visits)

    @property
    def customers(self) -> range:
        return range(1, self.n)

    @property
    def depot_window(self) -> TimeWindow:
        return self.visits[0].windows[0]

    @property
    def horizon_cap(self) -> float:
        """Latest permitted end-depot arrival."""
        return min(self.depot_window.upper, self.duration_deadline)

    def with_flags(self, minimise_time: Optional[bool] = None,
                   duration_deadline: Optional[float] = None) -> "Instance":
        return Instance(
            self.name, self.visits, self.vehicle_capacity, self.vehicle_cost,
            self.duration_deadline if duration_deadline is None else duration_deadline,
            self.minimise_time if minimise_time is None else minimise_time,
            self.precision, self.travel, self.arc_cost,
        )


@dataclass(frozen=True)
class ScheduledStop:
    visit: int
    window_index: int
    service_start: float


@dataclass
class CostBreakdown:
    distance: float = 0.0
    time_term: float = 0.0
    vehicle_term: float = 0.0
    penalty_term: float = 0.0

    @property
    def total(self) -> float:
        return self.distance + self.time_term + self.vehicle_term + self.penalty_term


@dataclass
class Solution:
    """Routes as visit-id sequences (depot excluded). Schedules, when present,
    carry one ScheduledStop per route stop."""
    routes: List[List[int]]
    schedules: Optional[List[List[ScheduledStop]]] = None
    unassigned: frozenset = frozenset()
    cost: Optional[CostBreakdown] = None


# -- parsing ------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def parse_instance(text: str) -> Instance:
    """Parse the extended Solomon instance format.

    Layout: header line "VRPMTW 1 <precision>", a name line, a VEHICLE block
    (count ignored, capacity kept), optional "VEHICLECOST x" / "DEADLINE x"
    directives, then a CUSTOMER section whose data lines read
    id x y demand service nwin lower1 upper1 [lower2 upper2 ...].
    """
    lines = text.splitlines()
    idx = 0

    def next_line(expect: str):
        nonlocal idx
        while idx < len(lines):
            stripped = lines[idx].strip()
            idx += 1
            if stripped:
                return stripped, idx
        raise ParseError(len(lines), f"unexpected end of file, expected {expect}")

    header, ln = next_line("header")
    parts = header.split()
    if len(parts) != 3 or parts[0] != "VRPMTW" or parts[1] != "1":
        raise ParseError(ln, f"malformed header {header!r}, expected 'VRPMTW 1 <precision>'")
    precision = parts[2]
    if precision != "exact":
        try:
            int(precision)
        except ValueError:
            raise ParseError(ln, f"precision must be 'exact' or an integer, got {precision!r}")

    name, _ = next_line("instance name")

    kw, ln = next_line("VEHICLE")
    if kw.upper() != "VEHICLE":
        raise ParseError(ln, f"expected VEHICLE, got {kw!r}")
    hdr, ln = next_line("NUMBER CAPACITY")
    if _is_number(hdr.split()[0]):
        raise ParseError(ln, "expected 'NUMBER CAPACITY' header line")
    nums, ln = next_line("vehicle count and capacity")
    toks = nums.split()
    if len(toks) != 2 or not all(_is_number(t) for t in toks):
        raise ParseError(ln, f"expected two numbers, got {nums!r}")
    capacity = float(toks[1])  # vehicle count ignored: fleet is unlimited

    vehicle_cost = None
    deadline = math.inf
    while True:
        line, ln = next_line("CUSTOMER")
        toks = line.split()
        key = toks[0].upper()
        if key == "CUSTOMER":
            break
        if key == "VEHICLECOST" and len(toks) == 2 and _is_number(toks[1]):
            vehicle_cost = float(toks[1])
        elif key == "DEADLINE" and len(toks) == 2 and _is_number(toks[1]):
            deadline = float(toks[1])
        else:
            raise ParseError(ln, f"unexpected line {line!r} before CUSTOMER section")

    visits: List[Visit] = []
    while idx < len(lines):
        raw = lines[idx].strip()
        idx += 1
        if not raw:
            continue
        toks = raw.split()
        if not _is_number(toks[0]):
            continue  # column header line inside the CUSTOMER section
        ln = idx
        if len(toks) < 6:
            raise ParseError(ln, f"customer line has {len(toks)} fields, need at least 6")
        try:
            vid = int(toks[0])
            x, y, dem, srv = (float(t) for t in toks[1:5])
            nwin = int(toks[5])
        except ValueError:
            raise ParseError(ln, f"non-numeric field in customer line {raw!r}")
        if dem < 0:
            raise ParseError(ln, f"negative demand {dem} for visit {vid}")
        if srv < 0:
            raise ParseError(ln, f"negative service time {srv} for visit {vid}")
        if nwin < 1:
            raise ParseError(ln, f"visit {vid} declares {nwin} windows")
        if len(toks) != 6 + 2 * nwin:
            raise ParseError(ln, f"visit {vid} declares {nwin} windows but line has "
                                 f"{len(toks) - 6} window fields")
        bounds = [float(t) for t in toks[6:]]
        wins = []
        for p in range(nwin):
            lo, hi = bounds[2 * p], bounds[2 * p + 1]
            if lo > hi:
                raise ParseError(ln, f"visit {vid} window {p} has lower {lo} > upper {hi}")
            wins.append(TimeWindow(lo, hi))
        wins.sort(key=lambda w: w.lower)
        for a, b in zip(wins, wins[1:]):
            if not a.upper < b.lower:
                raise ParseError(ln, f"visit {vid} has overlapping windows "
                                     f"[{a.lower},{a.upper}] and [{b.lower},{b.upper}]")
        if len(visits) != vid:
            raise ParseError(ln, f"visit ids must be consecutive from 0, got {vid}")
        visits.append(Visit(vid, x, y, dem, srv, tuple(wins)))

    if not visits:
        raise ParseError(len(lines), "no customer lines found")
    try:
        return Instance(name, visits, capacity, vehicle_cost, deadline,
                        precision=precision)
    except ValueError as exc:
        raise ParseError(len(lines), str(exc))


def write_instance(instance: Instance) -> str:
    out = [f"VRPMTW 1 {instance.precision}", instance.name, "", "VEHICLE",
           "NUMBER     CAPACITY", f"  1         {_fmt(instance.vehicle_capacity)}", ""]
    if instance.vehicle_cost != instance.vehicle_capacity:
        out.append(f"VEHICLECOST {_fmt(instance.vehicle_cost)}")
    if math.isfinite(instance.duration_deadline):
        out.append(f"DEADLINE {_fmt(instance.duration_deadline)}")
    out += ["CUSTOMER",
            "CUST NO.  XCOORD.  YCOORD.  DEMAND  SERVICE  NWIN  WINDOWS"]
    for v in instance.visits:
        parts = [str(v.id), _fmt(v.x), _fmt(v.y), _fmt(v.demand),
                 _fmt(v.service_time), str(len(v.windows))]
        for w in v.windows:
            parts += [_fmt(w.lower), _fmt(w.upper)]
        out.append("  ".join(parts))
    return "\n".join(out) + "\n"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


# -- objective ----------------------------------------------------------------


def evaluate_objective(instance: Instance, solution: Solution,
                       b: Optional[bool] = None) -> CostBreakdown:
    """Cost breakdown: arc costs, B * (service + waiting), vehicle costs.

    Waiting per leg is max(0, a_j - (a_i + s_i + t_ij)); the first leg never
    waits because the vehicle departs the depot exactly when needed.
    """
    b = instance.minimise_time if b is None else b
    dist = 0.0
    time_term = 0.0
    vehicles = 0
    c = instance.arc_cost
    t = instance.travel
    s = instance.service
    for r, route in enumerate(solution.routes):
        if not route:
            continue
        vehicles += 1
        prev = 0
        for v in route:
            dist += c[prev, v]
            prev = v
        dist += c[prev, 0]
        if b:
            if solution.schedules is None:
                raise ValueError("time-minimisation objective needs schedules")
            stops = solution.schedules[r]
            time_term += sum(s[v] for v in route)
            for k in range(1, len(stops)):
                a, bstop = stops[k - 1], stops[k]
                gap = bstop.service_start - (a.service_start + s[a.visit] + t[a.visit, bstop.visit])
                time_term += max(0.0, gap)
    return CostBreakdown(distance=dist, time_term=time_term,
                         vehicle_term=instance.vehicle_cost * vehicles)


# -- validation ---------------------------------------------------------------


def earliest_schedule(instance: Instance, route: Sequence[int]):
    """Greedy earliest service starts for a route, or None if infeasible.

    Includes the end-depot arrival as the last entry. At each stop the first
    window the vehicle can still meet is taken; that choice is feasibility
    preserving because windows are disjoint and sorted.
    """
    t = instance.travel
    s = instance.service
    cap = instance.horizon_cap
    now = instance.depot_window.lower
    prev = 0
    stops = []
    for v in route:
        arr = now + s[prev] + t[prev, v]
        visit = instance.visits[v]
        chosen = None
        for p, w in enumerate(visit.windows):
            if arr <= w.upper + EPS:
                chosen = (p, max(arr, w.lower))
                break
        if chosen is None:
            return None
        stops.append(ScheduledStop(v, chosen[0], chosen[1]))
        now = chosen[1]
        prev = v
    end = now + s[prev] + t[prev, 0]
    if end > cap + EPS:
        return None
    return stops, end


def validate_solution(instance: Instance, solution: Solution) -> List[str]:
    """Check a solution against the model constraints; return violation list.

    Empty result means feasible: full coverage, capacity respected, one window
    used per stop, schedule consistency, end-depot arrival by the deadline.
    """
    report: List[str] = []
    seen = {}
    for r, route in enumerate(solution.routes):
        for v in route:
            if v <= 0 or v >= instance.n:
                report.append(f"route {r}: unknown visit {v}")
            elif v in seen:
                report.append(f"visit {v} appears in route {seen[v]} and route {r}")
            else:
                seen[v] = r
    for v in sorted(solution.unassigned):
        if v in seen:
            report.append(f"visit {v} both assigned and unassigned")
        seen.setdefault(v, None)
        report.append(f"visit {v} unassigned")
    for v in instance.customers:
        if v not in seen:
            report.append(f"visit {v} missing")

    for r, route in enumerate(solution.routes):
        if not route:
            continue
        load = sum(instance.demand[v] for v in route)
        if load > instance.vehicle_capacity + EPS:
            report.append(f"route {r}: load {load} exceeds capacity {instance.vehicle_capacity}")

    if solution.schedules is not None:
        if len(solution.schedules) != len(solution.routes):
            report.append("schedule count does not match route count")
            return report
        for r, (route, stops) in enumerate(zip(solution.routes, solution.schedules)):
            if len(stops) != len(route) or any(st.visit != v for st, v in zip(stops, route)):
                report.append(f"route {r}: schedule stops do not match the visit sequence")
                continue
            _check_schedule(instance, r, route, stops, report)
    else:
        if instance.minimise_time:
            report.append("schedules required when minimising time")
        for r, route in enumerate(solution.routes):
            if route and earliest_schedule(instance, route) is None:
                report.append(f"route {r}: no feasible schedule exists")
    return report


def _check_schedule(instance: Instance, r: int, route, stops, report):
    t = instance.travel
    s = instance.service
    for st in stops:
        visit = instance.visits[st.visit]
        if not 0 <= st.window_index < len(visit.windows):
            report.append(f"route {r}: visit {st.visit} window index {st.window_index} out of range")
            continue
        w = visit.windows[st.window_index]
        if not w.contains(st.service_start):
            report.append(f"route {r}: visit {st.visit} starts at {st.service_start} "
                          f"outside window [{w.lower},{w.upper}]")
    first = stops[0]
    if first.service_start - t[0, first.visit] < instance.depot_window.lower - EPS:
        report.append(f"route {r}: departs the depot before it opens")
    for k in range(1, len(stops)):
        a, b = stops[k - 1], stops[k]
        if b.service_start < a.service_start + s[a.visit] + t[a.visit, b.visit] - EPS:
            report.append(f"route {r}: visit {b.visit} starts before travel from {a.visit} completes")
    last = stops[-1]
    end = last.service_start + s[last.visit] + t[last.visit, 0]
    if end > instance.horizon_cap + EPS:
        report.append(f"route {r}: ends at {end}, after the deadline {instance.horizon_cap}")


# -- instance perturbation and generation --------------------------------------


def perturb_instance(instance: Instance, seed: int) -> Instance:
    """Randomly reassign the per-visit window sets among customers.

    Deterministic for a fixed seed; everything except window ownership is kept.
    """
    rng = np.random.default_rng(seed)
    m = instance.n - 1
    perm = rng.permutation(m)
    visits = [instance.visits[0]]
    for i in range(m):
        src = instance.visits[1 + perm[i]]
        dst = instance.visits[1 + i]
        visits.append(replace(dst, windows=src.windows))
    return Instance(instance.name, visits, instance.vehicle_capacity, instance.vehicle_cost,
                    instance.duration_deadline, instance.minimise_time, instance.precision,
                    instance.travel, instance.arc_cost)


def random_instance(n: int, seed: int, max_windows: int = 3, horizon: float = 480.0,
                    capacity: float = 200.0, service: float = 10.0,
                    window_width: Tuple[float, float] = (30.0, 80.0),
                    name: Optional[str] = None) -> Instance:
    """Synthetic instance with windows anchored near plausible arrival times.

    Each customer gets 1..max_windows disjoint windows, one of which covers a
    reachable time, so random routes over nearby customers tend to be feasible.
    """
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, 100.0, size=(n + 1, 2))
    xy[0] = (50.0, 50.0)
    visits = [Visit(0, xy[0, 0], xy[0, 1], 0.0, 0.0, (TimeWindow(0.0, horizon),))]
    for i in range(1, n + 1):
        k = int(rng.integers(1, max_windows + 1))
        direct = math.hypot(xy[i, 0] - 50.0, xy[i, 1] - 50.0)
        anchor = rng.uniform(direct, horizon * 0.75)
        wins = _disjoint_windows(rng, k, anchor, horizon, window_width)
        demand = float(rng.integers(1, 36))
        visits.append(Visit(i, xy[i, 0], xy[i, 1], demand, service, tuple(wins)))
    return Instance(name or f"synth{n}-{seed}", visits, capacity)


def _disjoint_windows(rng, k, anchor, horizon, width_range):
    for _ in range(100):
        widths = rng.uniform(width_range[0], width_range[1], size=k)
        starts = [max(0.0, anchor - widths[0] * rng.uniform(0.2, 0.8))]
        starts += list(rng.uniform(0.0, horizon, size=k - 1))
        wins = sorted(zip(starts, widths))
        ok = True
        for (s0, w0), (s1, _) in zip(wins, wins[1:]):
            if s0 + w0 >= s1:
                ok = False
                break
        if ok:
            return [TimeWindow(s, min(s + w, horizon + width_range[1])) for s, w in wins]
    # fall back to the single anchored window when k windows will not fit
    w = width_range[1]
    s = max(0.0, anchor - w / 2)
    return [TimeWindow(s, s + w)]


# -- solution files -------------------------------------------------------------


def write_solution(solution: Solution, meta: Optional[dict] = None) -> str:
    doc = {
        "routes": [
            {
                "visits": list(route),
                "stops": None if solution.schedules is None else [
                    {"visit": st.visit, "window": st.window_index, "start": st.service_start}
                    for st in solution.schedules[r]
                ],
            }
            for r, route in enumerate(solution.routes)
        ],
        "unassigned": sorted(solution.unassigned),
        "cost": None if solution.cost is None else {
            "distance": solution.cost.distance,
            "time": solution.cost.time_term,
            "vehicles": solution.cost.vehicle_term,
            "penalty": solution.cost.penalty_term,
            "total": solution.cost.total,
        },
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2) + "\n"


def parse_solution(text: str) -> Solution:
    try:
        doc = json.loads(text)
        routes = [list(map(int, r["visits"])) for r in doc["routes"]]
        schedules = None
        if any(r.get("stops") is not None for r in doc["routes"]):
            schedules = [
                [ScheduledStop(int(s["visit"]), int(s["window"]), float(s["start"]))
                 for s in r["stops"]]
                for r in doc["routes"]
            ]
        cost = None
        if doc.get("cost") is not None:
            c = doc["cost"]
            cost = CostBreakdown(c["distance"], c["time"], c["vehicles"], c["penalty"])
        return Solution(routes=routes, schedules=schedules,
                        unassigned=frozenset(int(v) for v in doc["unassigned"]), cost=cost)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed solution document: {exc}")


def solution_meta(text: str) -> dict:
    return json.loads(text).get("meta", {})
