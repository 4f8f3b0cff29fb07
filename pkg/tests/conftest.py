"""Shared builders for the test suite."""

import math
from typing import List, Sequence, Tuple

import numpy as np
import pytest

from vrpmtw.model import Instance, TimeWindow, Visit


def mk_instance(customers: Sequence[tuple], horizon: float = 10_000.0,
                capacity: float = 1_000.0, deadline: float = math.inf,
                depot_xy: Tuple[float, float] = (0.0, 0.0),
                vehicle_cost=None, name: str = "test") -> Instance:
    """Instance from (x, y, demand, service, [(lo, hi), ...]) tuples."""
    visits = [Visit(0, depot_xy[0], depot_xy[1], 0.0, 0.0,
                    (TimeWindow(0.0, horizon),))]
    for k, (x, y, dem, srv, wins) in enumerate(customers, start=1):
        visits.append(Visit(k, x, y, dem, srv,
                            tuple(TimeWindow(lo, hi) for lo, hi in wins)))
    return Instance(name, visits, capacity, vehicle_cost=vehicle_cost,
                    duration_deadline=deadline)


def line_instance(offsets: Sequence[float], windows: Sequence[list],
                  services: Sequence[float], **kw) -> Instance:
    """Customers on the x axis at given offsets, so travel times are exact
    coordinate differences (handy for hand-checked examples)."""
    custs = [(off, 0.0, 1.0, srv, wins)
             for off, srv, wins in zip(offsets, services, windows)]
    return mk_instance(custs, **kw)


def random_route_case(seed: int, n_max: int = 10, wmax: int = 3):
    """One frozen random (instance, route) pair, mixing loose and tight
    geometry so both feasible and infeasible routes occur."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    horizon = float(rng.uniform(120.0, 480.0))
    custs = []
    for _ in range(n):
        wcnt = int(rng.integers(1, wmax + 1))
        pts = np.sort(rng.uniform(0.0, horizon, 2 * wcnt))
        pts = pts + np.arange(2 * wcnt) * 1e-3  # enforce strict separation
        wins = [(float(pts[2 * p]), float(pts[2 * p + 1])) for p in range(wcnt)]
        custs.append((float(rng.uniform(0, 60)), float(rng.uniform(0, 60)),
                      float(rng.uniform(1, 20)), float(rng.uniform(0, 15)), wins))
    deadline = float(rng.uniform(horizon / 2, horizon)) if rng.random() < 0.3 else math.inf
    ins = mk_instance(custs, horizon=horizon, deadline=deadline)
    k = int(rng.integers(1, n + 1))
    route = [int(v) for v in rng.permutation(np.arange(1, n + 1))[:k]]
    return ins, route


@pytest.fixture
def five_customers() -> Instance:
    return mk_instance([
        (10.0, 0.0, 5.0, 2.0, [(0.0, 400.0)]),
        (10.0, 10.0, 5.0, 2.0, [(30.0, 60.0), (100.0, 200.0)]),
        (0.0, 10.0, 5.0, 2.0, [(0.0, 400.0)]),
        (-10.0, 0.0, 5.0, 2.0, [(50.0, 90.0)]),
        (0.0, -10.0, 5.0, 2.0, [(10.0, 40.0), (60.0, 80.0), (200.0, 300.0)]),
    ], horizon=400.0, capacity=20.0)
