"""Typed-rectangle decomposition of the unit square and the mixed-tour
solution built on it.

The top strip of the square is cut into width-D boxes. Each box holds m
thin horizontal rectangles at the top (type I, one dense cluster each) and
2m very thin vertical slices in its lower-left (type II, swept en route);
everything else, including the big lower slab, is type III. A mixed tour
serves one type-I rectangle plus two type-II slices: two depot paths sweep
the slices in y-order and meet at the type-I rectangle's bottom-left
corner P1, where a local tour covers the cluster.

Counts are floored (no integrality assumptions); rectangle heights keep
their exact formula values so every group's measure stays
(1 - eps2)/sqrt(n), and the leftover strips join type III.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import BETA0, BETA1
from .core import (
    Instance,
    Point,
    PreconditionError,
    RoutePlan,
    Tour,
    euclid,
    make_plan,
    splitmix64,
)
from .itp import ItpResult, itp
from .tsp import SQUARE_EXACT_CAP, TspMethod, held_karp, karp_grid_tour, nn_2opt, tour_for_instance

MIN_DECOMPOSE_N = 10_000


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def measure(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x: float, y: float) -> bool:
        """Half-open membership, closed on edges that touch the unit square."""
        x_hi = x <= self.x1 if self.x1 >= 1.0 else x < self.x1
        y_hi = y <= self.y1 if self.y1 >= 1.0 else y < self.y1
        return self.x0 <= x and x_hi and self.y0 <= y and y_hi


@dataclass(frozen=True)
class Group:
    box: int
    type1_index: int
    type2_indices: tuple[int, int]


@dataclass
class Decomposition:
    n: int
    eps1: float
    eps2: float
    beta: float
    D: float
    m: int  # emitted type-I rectangles per box
    H: float
    W: float
    n_boxes: int
    boxes: list[Rect]
    type1: list[Rect]
    type2: list[Rect]
    type3: list[Rect]
    groups: list[Group]
    y_slab: float = field(repr=False, default=0.0)
    y_mid: float = field(repr=False, default=0.0)
    y_type1_lo: float = field(repr=False, default=0.0)
    _strip_t3: int | None = field(repr=False, default=None)
    _box_upper_t3: list[int | None] = field(repr=False, default_factory=list)
    _box_lower_t3: list[int] = field(repr=False, default_factory=list)

    def locate(self, p: Point) -> tuple[str, int]:
        """Which rectangle owns the point: ("I" | "II" | "III", index)."""
        x, y = p.x, p.y
        if y < self.y_slab:
            return "III", 0
        b = int(x / self.D)
        if b >= self.n_boxes:
            if self._strip_t3 is not None:
                return "III", self._strip_t3
            b = self.n_boxes - 1
        if y >= self.y_type1_lo:
            j = min(self.m - 1, max(0, int((1.0 - y) / self.H)))
            return "I", b * self.m + j
        if y >= self.y_mid:
            upper = self._box_upper_t3[b]
            if upper is not None:
                return "III", upper
            return "I", b * self.m + self.m - 1
        off = x - b * self.D
        j = int(off / self.W) if off > 0 else 0
        if j < 2 * self.m:
            return "II", b * 2 * self.m + j
        return "III", self._box_lower_t3[b]


def decompose(n: int, eps1: float, beta: float = BETA0) -> Decomposition:
    """Partition [0,1]^2 into typed rectangles for a target point count n."""
    if n < MIN_DECOMPOSE_N:
        raise PreconditionError(
            f"decompose needs n >= {MIN_DECOMPOSE_N}, got {n} (the box "
            "pattern degenerates below that)"
        )
    if not 0.0 < eps1 <= 1.0:
        raise PreconditionError(f"eps1={eps1} outside (0, 1]")
    if not BETA0 <= beta <= BETA1:
        raise PreconditionError(f"beta={beta} outside [{BETA0}, {BETA1}]")
    eps2 = eps1 / 10.0
    D = n ** -0.25
    n_boxes = int(1.0 / D)
    m_real = 5.0 / (40.0 - beta) * n ** 0.25
    m = int(m_real)
    # H keeps the exact formula value (real-valued count) so a group's
    # measure is exactly (1 - eps2) / sqrt(n); flooring only the counts
    # pushes the leftovers into type III.
    H = (1.0 - eps2) / (8.0 * m_real)
    W = beta / 10.0 * n ** -0.5
    y_slab = (3.0 + eps2) / 4.0
    y_mid = (7.0 + eps2) / 8.0
    y_t1 = 1.0 - m * H

    boxes: list[Rect] = []
    type1: list[Rect] = []
    type2: list[Rect] = []
    type3: list[Rect] = [Rect(0.0, 0.0, 1.0, y_slab)]
    groups: list[Group] = []
    box_upper: list[int | None] = []
    box_lower: list[int] = []
    strip_t3 = None
    if 1.0 - n_boxes * D > 1e-12:
        strip_t3 = len(type3)
        type3.append(Rect(n_boxes * D, y_slab, 1.0, 1.0))

    for b in range(n_boxes):
        x0 = b * D
        x1 = (b + 1) * D if b + 1 < n_boxes else n_boxes * D
        boxes.append(Rect(x0, y_slab, x1, 1.0))
        for j in range(m):
            type1.append(Rect(x0, 1.0 - (j + 1) * H, x1, 1.0 - j * H))
        if y_t1 - y_mid > 1e-12:
            box_upper.append(len(type3))
            type3.append(Rect(x0, y_mid, x1, y_t1))
        else:
            box_upper.append(None)
        for j in range(2 * m):
            type2.append(Rect(x0 + j * W, y_slab, x0 + (j + 1) * W, y_mid))
        box_lower.append(len(type3))
        type3.append(Rect(x0 + 2 * m * W, y_slab, x1, y_mid))
        for j in range(m):
            groups.append(
                Group(b, b * m + j, (b * 2 * m + 2 * j, b * 2 * m + 2 * j + 1))
            )

    return Decomposition(
        n=n,
        eps1=eps1,
        eps2=eps2,
        beta=beta,
        D=D,
        m=m,
        H=H,
        W=W,
        n_boxes=n_boxes,
        boxes=boxes,
        type1=type1,
        type2=type2,
        type3=type3,
        groups=groups,
        y_slab=y_slab,
        y_mid=y_mid,
        y_type1_lo=y_t1,
        _strip_t3=strip_t3,
        _box_upper_t3=box_upper,
        _box_lower_t3=box_lower,
    )


# ---------------------------------------------------------------------------
# Point placement and capacity accounting.

@dataclass
class Placement:
    """locate() result for every customer, cached for reuse."""

    kinds: list[str]
    indices: list[int]


def place_customers(dec: Decomposition, inst: Instance) -> Placement:
    kinds: list[str] = []
    indices: list[int] = []
    for p in inst.customers:
        kind, idx = dec.locate(p)
        kinds.append(kind)
        indices.append(idx)
    return Placement(kinds, indices)


@dataclass
class RectStats:
    kind: str
    index: int
    measure: float
    count: int
    band_low: float
    band_high: float
    in_band: bool


@dataclass
class GroupStats:
    index: int
    count: int
    fits_capacity: bool


@dataclass
class CapacityReport:
    k: int
    rects: list[RectStats]
    groups: list[GroupStats]
    band_violations: int
    group_capacity_fraction: float


def capacity_check(dec: Decomposition, inst: Instance) -> CapacityReport:
    """Point-count concentration per rectangle and per-group capacity flags.

    Band violations are reported, never fatal: the concentration event is
    probabilistic and finite samples may miss it locally.
    """
    placement = place_customers(dec, inst)
    counts = {"I": [0] * len(dec.type1), "II": [0] * len(dec.type2), "III": [0] * len(dec.type3)}
    for kind, idx in zip(placement.kinds, placement.indices):
        counts[kind][idx] += 1
    rect_stats: list[RectStats] = []
    violations = 0
    for kind, rects in (("I", dec.type1), ("II", dec.type2), ("III", dec.type3)):
        for idx, rect in enumerate(rects):
            lo = (1.0 - dec.eps2) * rect.measure * inst.n
            hi = (1.0 + dec.eps2) * rect.measure * inst.n
            c = counts[kind][idx]
            ok = lo < c < hi
            violations += not ok
            rect_stats.append(RectStats(kind, idx, rect.measure, c, lo, hi, ok))
    group_stats: list[GroupStats] = []
    for gi, g in enumerate(dec.groups):
        c = counts["I"][g.type1_index] + sum(counts["II"][j] for j in g.type2_indices)
        group_stats.append(GroupStats(gi, c, c <= inst.k))
    fits = sum(gs.fits_capacity for gs in group_stats)
    frac = fits / len(group_stats) if group_stats else 1.0
    return CapacityReport(inst.k, rect_stats, group_stats, violations, frac)


# ---------------------------------------------------------------------------
# Mixed tours.

@dataclass
class GroupPoints:
    """A group's rectangles together with the customers inside them."""

    index: int
    group: Group
    a: tuple[int, ...]
    b1: tuple[int, ...]
    b2: tuple[int, ...]
    p1: Point  # bottom-left corner of the type-I rectangle
    q1: Point  # bottom-left corner of the first slice
    s1: Point  # top-left corner of the first slice
    q2: Point
    s2: Point

    @property
    def total(self) -> int:
        return len(self.a) + len(self.b1) + len(self.b2)


def assign_group_points(dec: Decomposition, inst: Instance) -> list[GroupPoints]:
    placement = place_customers(dec, inst)
    a_members: dict[int, list[int]] = {}
    b_members: dict[int, list[int]] = {}
    for i, (kind, idx) in enumerate(zip(placement.kinds, placement.indices)):
        if kind == "I":
            a_members.setdefault(idx, []).append(i)
        elif kind == "II":
            b_members.setdefault(idx, []).append(i)
    out = []
    for gi, g in enumerate(dec.groups):
        r1 = dec.type1[g.type1_index]
        rb1 = dec.type2[g.type2_indices[0]]
        rb2 = dec.type2[g.type2_indices[1]]
        out.append(
            GroupPoints(
                index=gi,
                group=g,
                a=tuple(a_members.get(g.type1_index, ())),
                b1=tuple(b_members.get(g.type2_indices[0], ())),
                b2=tuple(b_members.get(g.type2_indices[1], ())),
                p1=Point(r1.x0, r1.y0),
                q1=Point(rb1.x0, rb1.y0),
                s1=Point(rb1.x0, rb1.y1),
                q2=Point(rb2.x0, rb2.y0),
                s2=Point(rb2.x0, rb2.y1),
            )
        )
    return out


@dataclass
class MixedTour:
    group_index: int
    order: tuple[int, ...]  # customer visit order of the realized route
    t0_cost: float  # local cycle over the type-I points and P1
    t1_cost: float  # depot -> slice 1 -> P1 path
    t2_cost: float  # depot -> slice 2 -> P1 path
    inner1: float  # monotone-path portion of t1 (Q1 -> points -> S1)
    inner2: float
    n1: int
    n2: int
    walk: np.ndarray  # full closed polyline including corner waypoints

    @property
    def cost(self) -> float:
        return self.t0_cost + self.t1_cost + self.t2_cost

    def walk_cost(self) -> float:
        return float(np.hypot(*(self.walk[1:] - self.walk[:-1]).T).sum())


def _path_legs(points: list[Point]) -> float:
    return float(
        sum(euclid(points[i], points[i + 1]) for i in range(len(points) - 1))
    )


def build_mixed_tour(
    gp: GroupPoints, inst: Instance, depot: Point | None = None, seed: int = 0
) -> MixedTour | None:
    """One mixed route: sweep slice 1 upward, run the local cycle at the
    cluster, sweep slice 2 downward. Returns None for an empty group."""
    if gp.total == 0:
        return None
    if depot is None:
        depot = inst.depots[0]
    if depot.y >= 0.0:
        raise PreconditionError("mixed construction needs the depot below the unit square")

    b1 = sorted(gp.b1, key=lambda i: inst.customers[i].y)
    b2 = sorted(gp.b2, key=lambda i: inst.customers[i].y)
    b1_pts = [inst.customers[i] for i in b1]
    b2_pts = [inst.customers[i] for i in b2]
    inner1 = _path_legs([gp.q1, *b1_pts, gp.s1])
    inner2 = _path_legs([gp.q2, *b2_pts, gp.s2])
    t1_cost = euclid(depot, gp.q1) + inner1 + euclid(gp.s1, gp.p1)
    t2_cost = euclid(depot, gp.q2) + inner2 + euclid(gp.s2, gp.p1)

    if gp.a:
        cluster = [inst.customers[i] for i in gp.a] + [gp.p1]
        if len(cluster) <= SQUARE_EXACT_CAP:
            sub = held_karp(cluster)
        else:
            sub = nn_2opt(cluster, start=len(cluster) - 1, seed=seed)
        pivot = sub.order.index(len(cluster) - 1)
        cycle = sub.order[pivot:] + sub.order[:pivot]  # starts at P1
        a_order = [gp.a[j] for j in cycle[1:]]
        t0_cost = sub.cost
        a_pts = [inst.customers[i] for i in a_order]
    else:
        a_order, t0_cost, a_pts = [], 0.0, []

    order = tuple(b1 + a_order + list(reversed(b2)))
    walk = [depot, gp.q1, *b1_pts, gp.s1, gp.p1]
    if a_pts:
        walk += [*a_pts, gp.p1]
    walk += [gp.s2, *reversed(b2_pts), gp.q2, depot]
    return MixedTour(
        group_index=gp.index,
        order=order,
        t0_cost=t0_cost,
        t1_cost=t1_cost,
        t2_cost=t2_cost,
        inner1=inner1,
        inner2=inner2,
        n1=len(b1),
        n2=len(b2),
        walk=np.array([(p.x, p.y) for p in walk]),
    )


def fact34_slacks(mt: MixedTour, gp: GroupPoints, dec: Decomposition, depot: Point) -> tuple[float, float]:
    """RHS minus LHS of the per-path bound
    cost(T_i) < dist(O, P1) + 1/4000 + n_i W + (W + 2D); positive when the
    depot sits at (1/2, -1000)."""
    base = euclid(depot, gp.p1) + 1.0 / 4000.0 + mt.n1 * dec.W + (dec.W + 2.0 * dec.D)
    base2 = euclid(depot, gp.p1) + 1.0 / 4000.0 + mt.n2 * dec.W + (dec.W + 2.0 * dec.D)
    return base - mt.t1_cost, base2 - mt.t2_cost


def _split_by_y(members: list[int], inst: Instance, k: int) -> list[Tour]:
    ordered = sorted(members, key=lambda i: inst.customers[i].y)
    return [
        Tour(0, tuple(ordered[i : i + k])) for i in range(0, len(ordered), k)
    ]


@dataclass
class MixedSolution:
    plan: RoutePlan
    dec: Decomposition
    mixed_tours: list[MixedTour]
    fallback_tours: list[Tour]  # over-capacity groups split by y-order
    type3_tours: list[Tour]
    type3_itp: ItpResult | None
    group_points: list[GroupPoints]


def build_full(inst: Instance, eps1: float, beta: float = BETA0) -> MixedSolution:
    """Mixed tours for every group plus a partitioned-tour plan for the
    type-III remainder (stand-in for the unavailable exact optimum there)."""
    if inst.s != 1:
        raise PreconditionError("mixed construction needs a single depot")
    depot = inst.depots[0]
    if depot.y >= 0.0:
        raise PreconditionError("mixed construction needs the depot below the unit square")
    if inst.k != round(math.sqrt(inst.n)):
        raise PreconditionError(
            f"mixed construction targets k = round(sqrt(n)); got k={inst.k}, n={inst.n}"
        )
    dec = decompose(inst.n, eps1, beta)
    gps = assign_group_points(dec, inst)
    base_seed = inst.seed if inst.seed is not None else 0

    mixed_tours: list[MixedTour] = []
    fallback: list[Tour] = []
    grouped: set[int] = set()
    for gp in gps:
        members = list(gp.a) + list(gp.b1) + list(gp.b2)
        grouped.update(members)
        if not members:
            continue
        if gp.total <= inst.k:
            mt = build_mixed_tour(gp, inst, depot, seed=splitmix64(base_seed ^ (gp.index + 1)))
            mixed_tours.append(mt)
        else:
            fallback.extend(_split_by_y(members, inst, inst.k))

    rest = [i for i in range(inst.n) if i not in grouped]
    type3_tours: list[Tour] = []
    type3_itp: ItpResult | None = None
    if len(rest) == 1:
        type3_tours = [Tour(0, (rest[0],))]
    elif len(rest) >= 2:
        sub = Instance(
            tuple(inst.customers[i] for i in rest),
            inst.depots,
            min(inst.k, len(rest)),
            seed=splitmix64(base_seed ^ 0x7333),
        )
        if len(rest) >= 16:
            tour = karp_grid_tour(sub, eps2=dec.eps2)
        else:
            tour = tour_for_instance(sub, TspMethod("nn_2opt"), seed=sub.seed)
        type3_itp = itp(tour, sub)
        type3_tours = [
            Tour(0, tuple(rest[j] for j in t.visit_order))
            for t in type3_itp.plan.tours
        ]

    tours = [Tour(0, mt.order) for mt in mixed_tours] + fallback + type3_tours
    plan = make_plan(tours, inst)
    return MixedSolution(plan, dec, mixed_tours, fallback, type3_tours, type3_itp, gps)


def build_solution(inst: Instance, eps1: float, beta: float = BETA0) -> RoutePlan:
    """Feasible CVRP plan from the decomposition-driven construction."""
    return build_full(inst, eps1, beta).plan


def breakdown_rows(sol: MixedSolution, inst: Instance) -> list[dict]:
    """Per-route cost split into radial, local, and stitching terms."""
    rows = []
    depot = inst.depots[0]
    gps = {gp.index: gp for gp in sol.group_points}
    for mt in sol.mixed_tours:
        gp = gps[mt.group_index]
        radial = euclid(depot, gp.q1) + euclid(depot, gp.q2)
        stitch = euclid(gp.s1, gp.p1) + euclid(gp.s2, gp.p1)
        rows.append(
            {
                "kind": "mixed",
                "index": mt.group_index,
                "customers": len(mt.order),
                "cost": mt.cost,
                "radial": radial,
                "local": mt.cost - radial - stitch,
                "stitch": stitch,
            }
        )
    ells = inst.ell_array()
    for label, tours in (("fallback", sol.fallback_tours), ("type3", sol.type3_tours)):
        for ti, t in enumerate(tours):
            pts = inst.xy[list(t.visit_order)]
            interior = float(np.hypot(*(pts[1:] - pts[:-1]).T).sum()) if t.size > 1 else 0.0
            radial = float(ells[t.visit_order[0]] + ells[t.visit_order[-1]])
            rows.append(
                {
                    "kind": label,
                    "index": ti,
                    "customers": t.size,
                    "cost": radial + interior,
                    "radial": radial,
                    "local": interior,
                    "stitch": 0.0,
                }
            )
    return rows
