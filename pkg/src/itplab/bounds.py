"""Lower bounds on the optimal CVRP cost.

Three layers: the classic bound max(rad, exact tour cost); a per-tour
inequality driven by the gap between a tour's mean and max depot
distances; and its aggregate over a feasible plan, which adds the
nearest-neighbor sum over a witness set U of customers whose depot
distance is close to their tour's maximum. The aggregate is certified
against the cost of the plan it was computed from, so it lower-bounds OPT
exactly when the plan is optimal (tiny instances, via exact_cvrp).

All bound computations accept an optional ``metric`` callback; with the
default Euclidean metric the nearest-neighbor sums use a k-d tree, with a
custom metric they fall back to brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .core import (
    Instance,
    Point,
    PreconditionError,
    RoutePlan,
    Tour,
    plan_cost,
    radial_cost,
    tour_cost,
    validate_plan,
)
from .tsp import held_karp

Metric = Callable[[Point, Point], float]

EXACT_CVRP_CAP = 12


def _check_lambda_eps(lam: float, eps: float) -> None:
    if not (lam > 0.0 and eps > 0.0 and lam + eps < 1.0):
        raise PreconditionError(
            f"need 0 < lambda, 0 < eps, lambda + eps < 1; got {lam}, {eps}"
        )


def _ells(tour: Tour, inst: Instance, metric: Metric | None) -> np.ndarray:
    if metric is None:
        return inst.ell_array()[list(tour.visit_order)]
    return np.array(
        [
            min(metric(d, inst.customers[x]) for d in inst.depots)
            for x in tour.visit_order
        ]
    )


@dataclass
class TourRadialStats:
    L: float  # mean depot distance over the tour's customers
    Delta: float  # max depot distance minus L
    near_set: tuple[int, ...]  # customers with ell >= L - c*Delta, last excluded


def tour_radial_stats(
    tour: Tour,
    inst: Instance,
    lam: float,
    eps: float,
    metric: Metric | None = None,
) -> TourRadialStats:
    """Mean/spread of depot distances plus the near-max witness set.

    The witness set keeps every customer whose depot distance is at least
    L - (lam+eps)/(1-lam-eps) * Delta, except the last such customer in
    traversal order; its size always exceeds (lam+eps)*m - 1.
    """
    _check_lambda_eps(lam, eps)
    if not tour.visit_order:
        raise PreconditionError("tour_radial_stats needs a non-empty tour")
    ells = _ells(tour, inst, metric)
    L = float(ells.mean())
    delta = max(0.0, float(ells.max()) - L)
    threshold = L - (lam + eps) / (1.0 - lam - eps) * delta
    qualifying = [tour.visit_order[j] for j in range(tour.size) if ells[j] >= threshold]
    return TourRadialStats(L, delta, tuple(qualifying[:-1]))


def _nn_sum_within(indices: tuple[int, ...], inst: Instance, metric: Metric | None) -> float:
    """Sum over x in the set of the distance to its nearest other member."""
    m = len(indices)
    if m <= 1:
        return 0.0
    if metric is None:
        pts = inst.xy[list(indices)]
        if m > 16:
            d, _ = cKDTree(pts).query(pts, k=2)
            return float(d[:, 1].sum())
        diff = pts[:, None, :] - pts[None, :, :]
        dm = np.hypot(diff[:, :, 0], diff[:, :, 1])
        np.fill_diagonal(dm, np.inf)
        return float(dm.min(axis=1).sum())
    total = 0.0
    for a in indices:
        total += min(metric(inst.customers[a], inst.customers[b]) for b in indices if b != a)
    return total


def lemma41_check(
    tour: Tour,
    inst: Instance,
    lam: float,
    eps: float,
    metric: Metric | None = None,
) -> float:
    """Slack of the per-tour inequality:
    cost(T) - [2(L - c*Delta) + sum over the witness set of nearest-other
    distances]; non-negative up to 1e-9 for every tour."""
    stats = tour_radial_stats(tour, inst, lam, eps, metric)
    rhs = 2.0 * (stats.L - (lam + eps) / (1.0 - lam - eps) * stats.Delta)
    rhs += _nn_sum_within(stats.near_set, inst, metric)
    if metric is None:
        cost = tour_cost(tour, inst)
    else:
        pts = [inst.depots[tour.depot_index], *(inst.customers[x] for x in tour.visit_order)]
        cost = sum(metric(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
        cost += metric(pts[-1], pts[0])
    return cost - rhs


@dataclass
class BoundReport:
    rad: float
    classic_lb: float  # max(rad, exact tour cost) when the oracle applies
    thm42_lb: float
    witness_U: tuple[int, ...]
    lam: float
    eps: float


def _merge_small_tours(tours: list[Tour], k: int) -> list[Tour]:
    """Greedily concatenate same-depot tours of size <= k/2 pairwise while
    the merge stays within capacity, so all but at most one tour per depot
    end up with more than k/2 customers. Used only to form the witness set."""
    by_depot: dict[int, list[Tour]] = {}
    for t in tours:
        if t.visit_order:
            by_depot.setdefault(t.depot_index, []).append(t)
    merged: list[Tour] = []
    for depot in sorted(by_depot):
        group = sorted(by_depot[depot], key=lambda t: (t.size, t.visit_order))
        while True:
            small = [t for t in group if t.size <= k / 2]
            if len(small) < 2 or small[0].size + small[1].size > k:
                break
            a, b = small[0], small[1]
            group.remove(a)
            group.remove(b)
            group.append(Tour(depot, a.visit_order + b.visit_order))
            group.sort(key=lambda t: (t.size, t.visit_order))
        merged.extend(group)
    return merged


def theorem42_bound(
    plan: RoutePlan,
    inst: Instance,
    lam: float,
    eps: float,
    metric: Metric | None = None,
) -> BoundReport:
    """Aggregate lower bound rad + (1-lam-eps) * sum over U of
    nearest-other-member distances, with U the union of per-tour witness
    sets after merging small tours.

    Certified inequality: bound <= cost of the supplied plan. It bounds
    OPT only when the plan itself is optimal.
    """
    _check_lambda_eps(lam, eps)
    validate_plan(plan, inst)
    merged = _merge_small_tours(plan.tours, inst.k)
    witness: list[int] = []
    for t in merged:
        witness.extend(tour_radial_stats(t, inst, lam, eps, metric).near_set)
    witness_u = tuple(sorted(witness))
    if metric is None:
        rad = radial_cost(inst)
    else:
        ells = np.array(
            [min(metric(d, c) for d in inst.depots) for c in inst.customers]
        )
        rad = 2.0 * float(ells.sum()) / inst.k
    bound = rad + (1.0 - lam - eps) * _nn_sum_within(witness_u, inst, metric)
    classic = rad
    if inst.s == 1 and inst.n + 1 <= 16 and metric is None:
        classic = max(rad, held_karp([inst.depots[0], *inst.customers]).cost)
    return BoundReport(rad, classic, bound, witness_u, lam, eps)


# ---------------------------------------------------------------------------
# Exact CVRP oracle for tiny instances.

def exact_cvrp(inst: Instance) -> RoutePlan:
    """Optimal solution by subset DP, for n <= 12 with a single depot.

    One Held-Karp-style pass computes, for every customer subset, the
    cheapest depot-anchored open path through it; closing through the
    depot gives every group's tour cost, and a set-cover DP over subsets
    of size <= k assembles the optimum.
    """
    if inst.s != 1:
        raise PreconditionError("exact_cvrp needs a single depot")
    n = inst.n
    if n > EXACT_CVRP_CAP:
        raise PreconditionError(f"exact_cvrp accepts at most {EXACT_CVRP_CAP} customers, got {n}")
    k = inst.k
    depot = inst.depot_xy[0]
    pts = inst.xy
    dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    dep = np.hypot(pts[:, 0] - depot[0], pts[:, 1] - depot[1])

    full = 1 << n
    path = np.full((full, n), np.inf)  # cheapest depot->...->last path
    parent = np.full((full, n), -1, dtype=np.int8)
    for j in range(n):
        path[1 << j, j] = dep[j]
    popcount = np.array([bin(m).count("1") for m in range(full)])
    for mask in range(1, full):
        if popcount[mask] < 2:
            continue
        for last in range(n):
            if not mask >> last & 1:
                continue
            prev_mask = mask ^ (1 << last)
            cand = path[prev_mask] + dist[:, last]
            j = int(np.argmin(cand))
            path[mask, last] = cand[j]
            parent[mask, last] = j

    group_cost = np.full(full, np.inf)
    group_last = np.full(full, -1, dtype=np.int8)
    for mask in range(1, full):
        if popcount[mask] > k:
            continue
        closed = path[mask] + dep
        j = int(np.argmin(closed))
        group_cost[mask] = closed[j]
        group_last[mask] = j

    cover = np.full(full, np.inf)
    choice = np.zeros(full, dtype=np.int64)
    cover[0] = 0.0
    for mask in range(1, full):
        low = mask & -mask
        sub = mask
        best = np.inf
        best_sub = 0
        while sub:
            if sub & low and group_cost[sub] + cover[mask ^ sub] < best:
                best = group_cost[sub] + cover[mask ^ sub]
                best_sub = sub
            sub = (sub - 1) & mask
        cover[mask] = best
        choice[mask] = best_sub

    tours: list[Tour] = []
    mask = full - 1
    while mask:
        sub = int(choice[mask])
        order = []
        m, last = sub, int(group_last[sub])
        while last != -1:
            order.append(last)
            m, last = m ^ (1 << last), int(parent[m, last])
        order.reverse()
        tours.append(Tour(0, tuple(order)))
        mask ^= sub
    plan = RoutePlan(tours, float(cover[full - 1]))
    validate_plan(plan, inst)
    return plan


# ---------------------------------------------------------------------------
# Nearest-neighbor statistics for the truncated-distance analysis.

def nearest_neighbor_distances(xy: np.ndarray) -> np.ndarray:
    """Exact nearest-other-point distance per row, k-d tree accelerated."""
    d, _ = cKDTree(xy).query(xy, k=2)
    return d[:, 1]


def nearest_neighbor_distances_brute(xy: np.ndarray) -> np.ndarray:
    """Quadratic-scan fallback; exact, used for small n and as cross-check."""
    n = len(xy)
    out = np.empty(n)
    for i in range(n):
        d = np.hypot(xy[:, 0] - xy[i, 0], xy[:, 1] - xy[i, 1])
        d[i] = np.inf
        out[i] = d.min()
    return out


@dataclass
class NnStats:
    r0: float
    z_set: tuple[int, ...]
    nn_sum_z: float


def nn_stats(inst: Instance, lam: float) -> NnStats:
    """Customers whose nearest-neighbor distance is below the scaled cutoff
    r0 / sqrt(n), where r0 is the radius at which the Poisson
    nearest-neighbor law 1 - exp(-pi r^2) reaches lam."""
    if not 0.0 <= lam < 1.0:
        raise PreconditionError(f"lambda={lam} outside [0, 1)")
    if inst.n < 2:
        raise PreconditionError("nn_stats needs n >= 2")
    r0 = math.sqrt(math.log(1.0 / (1.0 - lam)) / math.pi)
    d = nearest_neighbor_distances(inst.xy)
    cutoff = r0 / math.sqrt(inst.n)
    members = np.flatnonzero(d <= cutoff)
    return NnStats(r0, tuple(int(i) for i in members), float(d[members].sum()))
