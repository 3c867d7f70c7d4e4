"""Multiple depots: nearest-depot assignment, then one independent
single-depot partitioned-tour run per depot."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance, PreconditionError, RoutePlan, Tour, splitmix64
from .itp import ItpResult, itp
from .tsp import TspMethod, tour_for_instance


@dataclass
class DepotAssignment:
    depot_of: tuple[int, ...]  # customer index -> depot index
    customers_of: list[tuple[int, ...]]  # depot index -> customer indices


def assign_nearest(inst: Instance) -> DepotAssignment:
    """Per-customer argmin over depots; ties go to the lowest depot index."""
    diffs = inst.xy[:, None, :] - inst.depot_xy[None, :, :]
    d = np.hypot(diffs[:, :, 0], diffs[:, :, 1])
    depot_of = tuple(int(i) for i in d.argmin(axis=1))  # argmin takes first min
    customers_of: list[list[int]] = [[] for _ in range(inst.s)]
    for c, dep in enumerate(depot_of):
        customers_of[dep].append(c)
    return DepotAssignment(depot_of, [tuple(c) for c in customers_of])


@dataclass
class MultiItpResult:
    cost: float  # sum of the per-depot costs
    plan: RoutePlan
    assignment: DepotAssignment
    per_depot: list[ItpResult | None]  # None for depots with no customers


def sub_instance(inst: Instance, depot_index: int, customers: tuple[int, ...], seed: int) -> Instance:
    return Instance(
        tuple(inst.customers[c] for c in customers),
        (inst.depots[depot_index],),
        min(inst.k, len(customers)),
        seed=seed,
    )


def sub_seed(base: int, depot_index: int) -> int:
    """Per-depot tour seed; published so standalone runs can reproduce it."""
    return splitmix64(base ^ depot_index)


def multi_itp(inst: Instance, method: TspMethod, seed: int | None = None) -> MultiItpResult:
    """Assign customers to nearest depots, run the single-depot pipeline on
    each subproblem, and recompose. Empty subproblems contribute 0."""
    if inst.s < 1:
        raise PreconditionError("instance has no depots")
    base = seed if seed is not None else (inst.seed or 0)
    assignment = assign_nearest(inst)
    per_depot: list[ItpResult | None] = []
    tours: list[Tour] = []
    total = 0.0
    for d in range(inst.s):
        members = assignment.customers_of[d]
        if not members:
            per_depot.append(None)
            continue
        sub = sub_instance(inst, d, members, sub_seed(base, d))
        tour = tour_for_instance(sub, method, seed=sub.seed)
        result = itp(tour, sub)
        per_depot.append(result)
        total += result.cost
        tours.extend(
            Tour(d, tuple(members[j] for j in t.visit_order))
            for t in result.plan.tours
        )
    return MultiItpResult(total, RoutePlan(tours, total), assignment, per_depot)
