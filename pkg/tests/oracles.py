"""Independent reference computations used to cross-check the package.

Nothing here imports tradsim; each oracle takes a different route to the
same answer (exact rationals, brute force, linear-power domain, atan2).
"""
from __future__ import annotations

import math
from fractions import Fraction


def _q(v):
    return Fraction(v) if not isinstance(v, Fraction) else v


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def exact_segments_touch(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection in exact rational arithmetic."""
    p1, p2, q1, q2 = [tuple(_q(c) for c in p) for p in (p1, p2, q1, q2)]
    d1, d2 = _cross(q1, q2, p1), _cross(q1, q2, p2)
    d3, d4 = _cross(p1, p2, q1), _cross(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on(a, b, p):
        return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])

    return ((d1 == 0 and on(q1, q2, p1)) or (d2 == 0 and on(q1, q2, p2))
            or (d3 == 0 and on(p1, p2, q1)) or (d4 == 0 and on(p1, p2, q2)))


def exact_blocked(a, b, poly) -> bool:
    """Does segment ab touch the closed convex polygon? Exact arithmetic."""
    pts = [tuple(_q(c) for c in p) for p in poly]
    n = len(pts)

    def inside(p):
        p = tuple(_q(c) for c in p)
        signs = {(_cross(pts[i], pts[(i + 1) % n], p) > 0) - (_cross(pts[i], pts[(i + 1) % n], p) < 0)
                 for i in range(n)}
        return not ({1, -1} <= signs)

    if inside(a) or inside(b):
        return True
    return any(exact_segments_touch(a, b, pts[i], pts[(i + 1) % n]) for i in range(n))


def union_length_bruteforce(intervals, lo: int, hi: int) -> int:
    """Count integer cells [t, t+1) covered by any interval, clipped to [lo, hi)."""
    covered = 0
    for t in range(lo, hi):
        if any(s <= t < e for s, e in intervals):
            covered += 1
    return covered


def friis_rx_mw(tx_mw: float, freq_hz: float, exponent: float, dist: float) -> float:
    """Received power in mW: unit-gain free-space reference at 1 m, then d^-exponent."""
    lam = 299_792_458.0 / freq_hz
    return tx_mw * (lam / (4 * math.pi)) ** 2 / dist ** exponent


def link_budget_range(tx_mw=300.0, sens_dbm=-100.0, freq_hz=5.89e9, exponent=3.0) -> float:
    """Bisect the distance where received power equals the sensitivity."""
    sens_mw = 10 ** (sens_dbm / 10)
    lo, hi = 1.0, 1e5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if friis_rx_mw(tx_mw, freq_hz, exponent, mid) >= sens_mw:
            lo = mid
        else:
            hi = mid
    return lo


def quadrant_sector(self_pos, other_pos) -> int:
    """Fixed 4-sector classifier: 0 = [0,90), 1 = [90,180), ... by atan2 bearing."""
    ang = math.degrees(math.atan2(other_pos[1] - self_pos[1], other_pos[0] - self_pos[0])) % 360.0
    return int(ang // 90.0)


def bearing_deg(v) -> float:
    return math.degrees(math.atan2(v[1], v[0]))


def walk_path(points, dist: float):
    """Position and unit heading after walking ``dist`` along a polyline, segment by segment.

    A point exactly on a vertex takes the heading of the outgoing segment.
    """
    remaining = dist
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        seg = math.hypot(x1 - x0, y1 - y0)
        if remaining < seg:
            f = remaining / seg
            return (x0 + f * (x1 - x0), y0 + f * (y1 - y0)), ((x1 - x0) / seg, (y1 - y0) / seg)
        remaining -= seg
    (x0, y0), (x1, y1) = points[-2], points[-1]
    seg = math.hypot(x1 - x0, y1 - y0)
    return (x1, y1), ((x1 - x0) / seg, (y1 - y0) / seg)


def round_robin(groups):
    """Interleave already-sorted groups: first of each, then second of each, ..."""
    out = []
    for k in range(max((len(g) for g in groups), default=0)):
        out.extend(g[k] for g in groups if k < len(g))
    return out
