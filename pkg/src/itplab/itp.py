"""Iterated tour partitioning main phase and its exact accounting.

Given a tour (O, x_1, ..., x_n, O) and capacity k, shift i in [1, k] cuts
the customer sequence after positions i, i+k, i+2k, ...; every cut at a
consecutive pair (u, v) replaces the leg u-v by the two depot legs, adding
the splitting weight w(u, v) = ell(u) + ell(v) - delta(u, v) >= 0. The best
shift is found with one O(n) sweep over per-cut weights bucketed by
residue; the identity "shift cost = tour cost + total cut weight" is exact
and checked against direct route enumeration by itp_identity_check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Instance,
    PreconditionError,
    RoutePlan,
    Tour,
    TspTour,
    euclid,
)


@dataclass
class ItpResult:
    best_shift: int  # i* in [1, k]
    plan: RoutePlan
    cost: float
    per_shift_costs: list[float]
    splitting_weight_total: float  # total cut weight of the best shift


def _customer_sequence(tour: TspTour, inst: Instance) -> list[int]:
    seq = list(tour.rotated_to_depot())
    if sorted(seq) != list(range(inst.n)):
        raise PreconditionError("tour is not a permutation of {O} + customers")
    return seq


def _tour_arrays(seq: list[int], inst: Instance):
    """Per-position depot distances, consecutive legs, and tour cost."""
    pts = inst.xy[seq]
    ells = inst.ell_array()[seq]
    legs = np.hypot(*(pts[1:] - pts[:-1]).T) if len(seq) > 1 else np.empty(0)
    cost_t = float(ells[0] + legs.sum() + ells[-1])
    return ells, legs, cost_t


def _shift_weights(ells: np.ndarray, legs: np.ndarray, k: int) -> np.ndarray:
    """Total cut weight per shift i=1..k, via one pass over cut positions."""
    n = len(ells)
    w_total = np.zeros(k)
    if n > 1:
        # cutting after 1-based position j belongs to shift i = ((j-1) % k) + 1
        w = ells[:-1] + ells[1:] - legs
        residues = np.arange(1, n) % k  # j mod k, with i=k at residue 0
        np.add.at(w_total, (residues - 1) % k, w)
    return w_total


def _segments(seq: list[int], i: int, k: int) -> list[tuple[int, ...]]:
    segs = [tuple(seq[:i])]
    segs.extend(tuple(seq[j : j + k]) for j in range(i, len(seq), k))
    return [s for s in segs if s]


def itp(tour: TspTour, inst: Instance) -> ItpResult:
    """Best-of-k-shifts tour partition; runs in O(n + k) after the tour."""
    if inst.s != 1:
        raise PreconditionError("itp needs a single depot; use multidepot.multi_itp")
    seq = _customer_sequence(tour, inst)
    k = inst.k
    ells, legs, cost_t = _tour_arrays(seq, inst)
    w_total = _shift_weights(ells, legs, k)
    per_shift = cost_t + w_total
    best = int(np.argmin(per_shift))  # ties break toward the smallest shift
    tours = [Tour(0, seg) for seg in _segments(seq, best + 1, k)]
    cost = float(per_shift[best])
    return ItpResult(
        best_shift=best + 1,
        plan=RoutePlan(tours, cost),
        cost=cost,
        per_shift_costs=[float(c) for c in per_shift],
        splitting_weight_total=float(w_total[best]),
    )


def splitting_weight(u: int, v: int, inst: Instance) -> float:
    """w(u, v) = ell(u) + ell(v) - delta(u, v); non-negative by the triangle
    inequality."""
    if inst.s != 1:
        raise PreconditionError("splitting_weight needs a single depot")
    du = float(inst._ell[u])
    dv = float(inst._ell[v])
    return du + dv - euclid(inst.customers[u], inst.customers[v])


@dataclass
class IdentityReport:
    per_shift_deviation: list[float]
    max_deviation: float


def _route_sum(seq: list[int], i: int, k: int, inst: Instance) -> float:
    """Direct route-enumeration cost of shift i: plain per-route summation."""
    total = 0.0
    depot = inst.depots[0]
    for seg in _segments(seq, i, k):
        pts = inst.xy[list(seg)]
        total += math.hypot(pts[0, 0] - depot.x, pts[0, 1] - depot.y)
        total += float(np.hypot(*(pts[1:] - pts[:-1]).T).sum())
        total += math.hypot(pts[-1, 0] - depot.x, pts[-1, 1] - depot.y)
    return total


def itp_identity_check(tour: TspTour, inst: Instance) -> IdentityReport:
    """Compare, for every shift, enumerated route cost against
    tour cost + total cut weight."""
    if inst.s != 1:
        raise PreconditionError("itp_identity_check needs a single depot")
    seq = _customer_sequence(tour, inst)
    k = inst.k
    ells, legs, cost_t = _tour_arrays(seq, inst)
    w_total = _shift_weights(ells, legs, k)
    deviations = [
        abs(_route_sum(seq, i + 1, k, inst) - (cost_t + float(w_total[i])))
        for i in range(k)
    ]
    return IdentityReport(deviations, max(deviations))


def ag_inequality_check(tour: TspTour, inst: Instance) -> float:
    """Slack of the classic partition bound:
    rad + (1 - 1/k) * tour cost - best shift cost. Never below -1e-9."""
    if inst.s != 1:
        raise PreconditionError("ag_inequality_check needs a single depot")
    seq = _customer_sequence(tour, inst)
    k = inst.k
    ells, legs, cost_t = _tour_arrays(seq, inst)
    rad = 2.0 * float(inst.ell_array().sum()) / k
    best = float((cost_t + _shift_weights(ells, legs, k)).min())
    return rad + (1.0 - 1.0 / k) * cost_t - best
