"""Geometric primitives, CVRP instances, tours, and solution costs.

Coordinates are double-precision reals. Customer identity is the index in
the instance's customer list, never the coordinates, so duplicate points
stay distinguishable. All cost comparisons elsewhere in the package use
absolute tolerance 1e-9 unless stated otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

COST_TOL = 1e-9


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


def splitmix64(x: int) -> int:
    """SplitMix64 mixing step; used to derive per-trial RNG streams."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise PreconditionError(f"non-finite point ({self.x}, {self.y})")


def euclid(p: Point, q: Point) -> float:
    """Euclidean distance between two points."""
    return math.hypot(p.x - q.x, p.y - q.y)


@dataclass(eq=False)
class Instance:
    """A unit-demand CVRP instance: customers, one or more depots, capacity k.

    Treated as immutable after construction; the derived coordinate arrays
    are built eagerly so all downstream operations stay vectorizable.
    """

    customers: tuple[Point, ...]
    depots: tuple[Point, ...]
    k: int
    seed: int | None = None
    xy: np.ndarray = field(init=False, repr=False)
    depot_xy: np.ndarray = field(init=False, repr=False)
    _ell: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.customers = tuple(self.customers)
        self.depots = tuple(self.depots)
        if len(self.customers) < 1:
            raise PreconditionError("instance needs at least one customer")
        if len(self.depots) < 1:
            raise PreconditionError("instance needs at least one depot")
        if not 1 <= self.k <= len(self.customers):
            raise PreconditionError(
                f"capacity k={self.k} outside [1, n={len(self.customers)}]"
            )
        self.xy = np.array([(p.x, p.y) for p in self.customers], dtype=float)
        self.depot_xy = np.array([(p.x, p.y) for p in self.depots], dtype=float)
        # min-over-depots distance per customer (single depot: plain distance)
        diffs = self.xy[:, None, :] - self.depot_xy[None, :, :]
        self._ell = np.hypot(diffs[:, :, 0], diffs[:, :, 1]).min(axis=1)

    @property
    def n(self) -> int:
        return len(self.customers)

    @property
    def s(self) -> int:
        return len(self.depots)

    def ell_array(self) -> np.ndarray:
        """Per-customer nearest-depot distances, shape (n,)."""
        return self._ell


def ell(x: int, inst: Instance) -> float:
    """Nearest-depot distance of customer x (single depot: depot distance)."""
    if not 0 <= x < inst.n:
        raise PreconditionError(f"customer index {x} outside [0, {inst.n})")
    return float(inst._ell[x])


def radial_cost(inst: Instance) -> float:
    """rad = (2/k) * sum of nearest-depot distances."""
    return 2.0 * float(inst._ell.sum()) / inst.k


@dataclass(frozen=True)
class Tour:
    """One depot-anchored route: depot index plus ordered customer indices."""

    depot_index: int
    visit_order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "visit_order", tuple(self.visit_order))
        if len(set(self.visit_order)) != len(self.visit_order):
            raise PreconditionError("tour repeats a customer index")

    @property
    def size(self) -> int:
        return len(self.visit_order)


def tour_cost(tour: Tour, inst: Instance) -> float:
    """Closed-loop cost depot -> customers in order -> depot; empty tour is 0."""
    if not tour.visit_order:
        return 0.0
    order = list(tour.visit_order)
    if min(order) < 0 or max(order) >= inst.n:
        raise PreconditionError("tour contains an invalid customer index")
    if not 0 <= tour.depot_index < inst.s:
        raise PreconditionError(f"invalid depot index {tour.depot_index}")
    pts = inst.xy[order]
    depot = inst.depot_xy[tour.depot_index]
    legs = np.hypot(*(pts[1:] - pts[:-1]).T).sum() if len(order) > 1 else 0.0
    out = math.hypot(*(pts[0] - depot))
    back = math.hypot(*(pts[-1] - depot))
    return float(out + legs + back)


@dataclass
class RoutePlan:
    """A collection of tours covering the customers; total_cost is cached."""

    tours: list[Tour]
    total_cost: float

    def normalized(self) -> "RoutePlan":
        """Drop empty tours (legal, but carry no cost and no customers)."""
        return RoutePlan([t for t in self.tours if t.visit_order], self.total_cost)


def plan_cost(plan: RoutePlan, inst: Instance) -> float:
    """Recompute the plan's cost as the sum of per-tour closed-loop costs."""
    return float(sum(tour_cost(t, inst) for t in plan.tours))


def make_plan(tours: list[Tour], inst: Instance) -> RoutePlan:
    plan = RoutePlan(list(tours), 0.0)
    plan.total_cost = plan_cost(plan, inst)
    return plan


def validate_plan(plan: RoutePlan, inst: Instance) -> None:
    """Raise unless the plan covers every customer exactly once within capacity."""
    seen: set[int] = set()
    count = 0
    for t in plan.tours:
        if t.size > inst.k:
            raise PreconditionError(
                f"tour visits {t.size} customers > capacity {inst.k}"
            )
        if not 0 <= t.depot_index < inst.s:
            raise PreconditionError(f"invalid depot index {t.depot_index}")
        for x in t.visit_order:
            if not 0 <= x < inst.n:
                raise PreconditionError(f"invalid customer index {x}")
        seen.update(t.visit_order)
        count += t.size
    if count != inst.n or len(seen) != inst.n:
        raise PreconditionError("plan does not cover every customer exactly once")


@dataclass(frozen=True)
class TspTour:
    """A cyclic tour over {depot} + customers, depot encoded as index -1.

    ``order`` lists each element exactly once; the cycle closes from the
    last entry back to the first. Instance-level tours always contain -1.
    """

    order: tuple[int, ...]
    cost: float

    def rotated_to_depot(self) -> tuple[int, ...]:
        """Customer sequence starting right after the depot."""
        if -1 not in self.order:
            raise PreconditionError("tour does not contain the depot marker -1")
        i = self.order.index(-1)
        return self.order[i + 1 :] + self.order[:i]


def cycle_cost(order: tuple[int, ...], inst: Instance, depot_index: int = 0) -> float:
    """Closed-cycle length of an instance-level order (-1 = depot)."""
    pts = np.array(
        [
            inst.depot_xy[depot_index] if j == -1 else inst.xy[j]
            for j in order
        ]
    )
    closed = np.vstack([pts, pts[:1]])
    return float(np.hypot(*(closed[1:] - closed[:-1]).T).sum())


# ---------------------------------------------------------------------------
# JSON round-tripping. Shortest round-trip float rendering is what
# json.dumps emits for Python floats, so both formats are lossless.

def instance_to_dict(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "k": inst.k,
        "depots": [[p.x, p.y] for p in inst.depots],
        "customers": [[p.x, p.y] for p in inst.customers],
        "seed": inst.seed,
    }


def instance_from_dict(data: dict) -> Instance:
    try:
        customers = tuple(Point(float(x), float(y)) for x, y in data["customers"])
        depots = tuple(Point(float(x), float(y)) for x, y in data["depots"])
        k = int(data["k"])
        seed = data.get("seed")
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed instance JSON: {exc}") from exc
    if "n" in data and int(data["n"]) != len(customers):
        raise PreconditionError("instance JSON: n does not match customer count")
    return Instance(customers, depots, k, None if seed is None else int(seed))


def instance_to_json(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst))


def instance_from_json(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def plan_to_dict(plan: RoutePlan) -> dict:
    return {
        "tours": [
            {"depot": t.depot_index, "order": list(t.visit_order)}
            for t in plan.tours
        ]
    }


def plan_from_dict(data: dict, inst: Instance) -> RoutePlan:
    try:
        tours = [
            Tour(int(t["depot"]), tuple(int(i) for i in t["order"]))
            for t in data["tours"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed plan JSON: {exc}") from exc
    return make_plan(tours, inst)


def plan_to_json(plan: RoutePlan) -> str:
    return json.dumps(plan_to_dict(plan))


def plan_from_json(text: str, inst: Instance) -> RoutePlan:
    return plan_from_dict(json.loads(text), inst)
