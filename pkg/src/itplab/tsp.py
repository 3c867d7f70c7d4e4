"""Traveling-salesman tour builders: exact bitmask DP, NN+2-opt, and the
grid-partitioned tour used both as ITP preprocessing and as the scaled
random-tour probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, Point, PreconditionError, TspTour, cycle_cost, splitmix64

EXACT_DP_CAP = 16
SQUARE_EXACT_CAP = 14  # within-square exact DP threshold for the grid tour


@dataclass(frozen=True)
class TspMethod:
    """Tour-builder choice plus method-specific settings."""

    variant: str  # one of {"exact_dp", "nn_2opt", "karp_grid"}
    two_opt_cap: int | None = None  # edge examinations; None = 50 * n^2
    eps2: float = 0.25  # grid sizing parameter for karp_grid

    def __post_init__(self):
        if self.variant not in ("exact_dp", "nn_2opt", "karp_grid"):
            raise PreconditionError(f"unknown tsp method {self.variant!r}")


def _dist_matrix(pts: np.ndarray) -> np.ndarray:
    d = pts[:, None, :] - pts[None, :, :]
    return np.hypot(d[:, :, 0], d[:, :, 1])


def held_karp(points: list[Point]) -> TspTour:
    """Exact minimum Hamiltonian cycle by bitmask DP; capped at 16 points."""
    m = len(points)
    if not 2 <= m <= EXACT_DP_CAP:
        raise PreconditionError(
            f"held_karp accepts 2..{EXACT_DP_CAP} points, got {m}"
        )
    pts = np.array([(p.x, p.y) for p in points])
    if m == 2:
        return TspTour((0, 1), 2.0 * float(np.hypot(*(pts[0] - pts[1]))))
    dist = _dist_matrix(pts)
    full = 1 << m
    dp = np.full((full, m), np.inf)
    parent = np.full((full, m), -1, dtype=np.int8)
    dp[1, 0] = 0.0
    for mask in range(1, full, 2):  # point 0 is always the anchor
        lasts = [j for j in range(1, m) if mask >> j & 1]
        if not lasts:
            continue
        for last in lasts:
            prev_mask = mask ^ (1 << last)
            cand = dp[prev_mask] + dist[:, last]
            j = int(np.argmin(cand))
            dp[mask, last] = cand[j]
            parent[mask, last] = j
    final = dp[full - 1] + dist[:, 0]
    final[0] = np.inf
    last = int(np.argmin(final))
    cost = float(final[last])
    order = []
    mask = full - 1
    while last != -1:
        order.append(last)
        mask, last = mask ^ (1 << last), int(parent[mask, last])
    order.reverse()  # starts at 0
    return TspTour(tuple(order), cost)


def _nn_order(pts: np.ndarray, start: int) -> np.ndarray:
    m = len(pts)
    order = np.empty(m, dtype=int)
    order[0] = start
    remaining = np.ones(m, dtype=bool)
    remaining[start] = False
    cur = start
    for i in range(1, m):
        idx = np.flatnonzero(remaining)
        d = np.hypot(*(pts[idx] - pts[cur]).T)
        cur = int(idx[np.argmin(d)])
        order[i] = cur
        remaining[cur] = False
    return order


def nn_2opt(
    points: list[Point],
    start: int = 0,
    seed: int = 0,
    examination_cap: int | None = None,
) -> TspTour:
    """Nearest-neighbor construction followed by 2-opt to local optimality.

    Deterministic given ``start`` and ``seed``; the seed only shuffles the
    scan order of 2-opt anchors. Stops at local optimality or after
    ``examination_cap`` edge examinations (default 50 * n^2).
    """
    m = len(points)
    if m < 2:
        raise PreconditionError("nn_2opt needs at least 2 points")
    if not 0 <= start < m:
        raise PreconditionError(f"start index {start} outside [0, {m})")
    pts = np.array([(p.x, p.y) for p in points])
    tour = _nn_order(pts, start)
    if m <= 3:
        closed = np.vstack([pts[tour], pts[tour[:1]]])
        return TspTour(tuple(int(i) for i in tour), float(np.hypot(*(closed[1:] - closed[:-1]).T).sum()))

    cap = examination_cap if examination_cap is not None else 50 * m * m
    rng = np.random.Generator(np.random.PCG64(seed))
    examined = 0
    improved = True
    while improved and examined < cap:
        improved = False
        x = pts[tour]
        legs = np.hypot(*(np.roll(x, -1, axis=0) - x).T)
        for i in rng.permutation(m - 2):
            i = int(i)
            hi = m - 1 if i > 0 else m - 2  # reversing up to the closing edge
            js = np.arange(i + 2, hi + 1)
            if len(js) == 0:
                continue
            examined += len(js)
            jn = (js + 1) % m
            delta = (
                np.hypot(*(x[js] - x[i]).T)
                + np.hypot(*(x[jn] - x[i + 1]).T)
                - legs[i]
                - legs[js]
            )
            b = int(np.argmin(delta))
            if delta[b] < -1e-12:
                j = int(js[b])
                tour[i + 1 : j + 1] = tour[i + 1 : j + 1][::-1]
                x = pts[tour]
                legs = np.hypot(*(np.roll(x, -1, axis=0) - x).T)
                improved = True
            if examined >= cap:
                break
    x = pts[tour]
    cost = float(np.hypot(*(np.roll(x, -1, axis=0) - x).T).sum())
    return TspTour(tuple(int(i) for i in tour), cost)


def grid_side_count(n: int, eps2: float) -> int:
    """Squares per side: n^{1/4} shrunk by sqrt(1+eps2), rounded, at least 1."""
    return max(1, round(n ** 0.25 / math.sqrt(1.0 + eps2)))


def boustrophedon_order(g: int) -> list[tuple[int, int]]:
    """(row, col) sequence in which consecutive squares share a grid edge."""
    seq = []
    for row in range(g):
        cols = range(g) if row % 2 == 0 else range(g - 1, -1, -1)
        seq.extend((row, col) for col in cols)
    return seq


def _square_path(inst: Instance, members: list[int], seed: int) -> list[int]:
    """Solve one square's points; return the cycle laid out as an open path."""
    if len(members) == 1:
        return members
    pts = [inst.customers[i] for i in members]
    if len(members) <= SQUARE_EXACT_CAP:
        sub = held_karp(pts)
    else:
        sub = nn_2opt(pts, start=0, seed=seed)
    return [members[j] for j in sub.order]


def karp_grid_tour(inst: Instance, eps2: float = 0.25) -> TspTour:
    """Grid-partitioned tour: solve each side-D square, stitch boustrophedon.

    Squares per side are floor-adjusted (see grid_side_count) so no
    integrality assumption is needed; empty squares are skipped when
    stitching. The depot links the first point of the first occupied
    square and the last point of the last one.
    """
    if inst.s != 1:
        raise PreconditionError("karp_grid_tour needs a single depot")
    if inst.n < 16:
        raise PreconditionError(f"karp_grid_tour needs n >= 16, got {inst.n}")
    if not 0.0 < eps2 <= 1.0:
        raise PreconditionError(f"eps2={eps2} outside (0, 1]")
    g = grid_side_count(inst.n, eps2)
    col = np.minimum(g - 1, (inst.xy[:, 0] * g).astype(int))
    row = np.minimum(g - 1, (inst.xy[:, 1] * g).astype(int))
    cells: dict[tuple[int, int], list[int]] = {}
    for i in range(inst.n):
        cells.setdefault((int(row[i]), int(col[i])), []).append(i)

    base = inst.seed if inst.seed is not None else 0
    seq: list[int] = []
    for pos, cell in enumerate(boustrophedon_order(g)):
        members = cells.get(cell)
        if members:
            seq.extend(_square_path(inst, members, splitmix64(base ^ (pos + 1))))
    order = (-1, *seq)
    return TspTour(order, cycle_cost(order, inst))


def tour_for_instance(inst: Instance, method: TspMethod, seed: int = 0) -> TspTour:
    """Build an instance-level tour over {depot} + customers (-1 = depot)."""
    if inst.s != 1:
        raise PreconditionError("tour builders need a single depot")
    if method.variant == "karp_grid":
        return karp_grid_tour(inst, method.eps2)
    points = [inst.depots[0], *inst.customers]
    if method.variant == "exact_dp":
        if len(points) > EXACT_DP_CAP:
            raise PreconditionError(
                f"exact_dp accepts at most {EXACT_DP_CAP} total points, got {len(points)}"
            )
        raw = held_karp(points)
    else:
        raw = nn_2opt(points, start=0, seed=seed, examination_cap=method.two_opt_cap)
    order = tuple(j - 1 if j > 0 else -1 for j in raw.order)
    return TspTour(order, raw.cost)
