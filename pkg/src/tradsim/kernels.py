"""Hot numeric kernels: link audience and fleet motion.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one with
the same signature. The numba path is used when numba imports and the
environment variable ``TRADSIM_NUMBA`` is not set to ``0``; the numpy path
is always importable for comparison (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return decorator


USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("TRADSIM_NUMBA", "1") != "0"
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# link audience: range threshold + building line of sight
# ---------------------------------------------------------------------------

@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def _within(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


@njit(cache=True)
def _seg_hit(px, py, qx, qy, ax, ay, bx, by):
    d1 = _orient(ax, ay, bx, by, px, py)
    d2 = _orient(ax, ay, bx, by, qx, qy)
    d3 = _orient(px, py, qx, qy, ax, ay)
    d4 = _orient(px, py, qx, qy, bx, by)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _within(ax, ay, bx, by, px, py):
        return True
    if d2 == 0 and _within(ax, ay, bx, by, qx, qy):
        return True
    if d3 == 0 and _within(px, py, qx, qy, ax, ay):
        return True
    if d4 == 0 and _within(px, py, qx, qy, bx, by):
        return True
    return False


@njit(cache=True)
def _inside(verts, n, px, py):
    sign = 0
    for e in range(n):
        ax, ay = verts[e, 0], verts[e, 1]
        f = e + 1 if e + 1 < n else 0
        o = _orient(ax, ay, verts[f, 0], verts[f, 1], px, py)
        if o == 0:
            continue
        s = 1 if o > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


@njit(cache=True)
def _blocked(px, py, qx, qy, verts, counts, boxes):
    lox, hix = min(px, qx), max(px, qx)
    loy, hiy = min(py, qy), max(py, qy)
    for m in range(verts.shape[0]):
        if boxes[m, 2] < lox or boxes[m, 0] > hix or boxes[m, 3] < loy or boxes[m, 1] > hiy:
            continue
        n = counts[m]
        if _inside(verts[m], n, px, py) or _inside(verts[m], n, qx, qy):
            return True
        for e in range(n):
            f = e + 1 if e + 1 < n else 0
            if _seg_hit(px, py, qx, qy, verts[m, e, 0], verts[m, e, 1], verts[m, f, 0], verts[m, f, 1]):
                return True
    return False


@njit(cache=True)
def link_mask_numba(sx, sy, pos, eligible, range_m, verts, counts, boxes):
    n = pos.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    r2 = range_m * range_m
    for i in range(n):
        if not eligible[i]:
            continue
        dx = pos[i, 0] - sx
        dy = pos[i, 1] - sy
        d2 = dx * dx + dy * dy
        if d2 > r2 or d2 == 0.0:
            continue
        if not _blocked(sx, sy, pos[i, 0], pos[i, 1], verts, counts, boxes):
            out[i] = True
    return out


def _orient_np(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _within_np(ax, ay, bx, by, px, py):
    return ((np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by)))


def link_mask_numpy(sx, sy, pos, eligible, range_m, verts, counts, boxes):
    d2 = (pos[:, 0] - sx) ** 2 + (pos[:, 1] - sy) ** 2
    out = eligible & (d2 <= range_m * range_m) & (d2 > 0.0)
    if verts.shape[0] == 0 or not out.any():
        return out
    idx = np.nonzero(out)[0]
    qx = pos[idx, 0][:, None, None]          # (C, 1, 1)
    qy = pos[idx, 1][:, None, None]
    k = verts.shape[1]
    ax = verts[None, :, :, 0]                # (1, M, K)
    ay = verts[None, :, :, 1]
    nxt = (np.arange(k)[None, :] + 1) % counts[:, None]  # wrap at each polygon's own count
    bxv = np.take_along_axis(verts[:, :, 0], nxt, axis=1)[None]
    byv = np.take_along_axis(verts[:, :, 1], nxt, axis=1)[None]
    valid = (np.arange(k)[None, :] < counts[:, None])[None]

    d1 = _orient_np(ax, ay, bxv, byv, sx, sy)
    d2_ = _orient_np(ax, ay, bxv, byv, qx, qy)
    d3 = _orient_np(sx, sy, qx, qy, ax, ay)
    d4 = _orient_np(sx, sy, qx, qy, bxv, byv)
    proper = (((d1 > 0) & (d2_ < 0)) | ((d1 < 0) & (d2_ > 0))) & (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
    touch = ((d1 == 0) & _within_np(ax, ay, bxv, byv, sx, sy)) \
        | ((d2_ == 0) & _within_np(ax, ay, bxv, byv, qx, qy)) \
        | ((d3 == 0) & _within_np(sx, sy, qx, qy, ax, ay)) \
        | ((d4 == 0) & _within_np(sx, sy, qx, qy, bxv, byv))
    edge_hit = ((proper | touch) & valid).any(axis=2)          # (C, M)

    # endpoint inside polygon: all non-zero orientations share one sign
    o_s = np.where(valid, _orient_np(ax, ay, bxv, byv, sx, sy), 0.0)
    o_q = np.where(valid, _orient_np(ax, ay, bxv, byv, qx, qy), 0.0)
    inside_s = ~((o_s > 0).any(axis=2) & (o_s < 0).any(axis=2))
    inside_q = ~((o_q > 0).any(axis=2) & (o_q < 0).any(axis=2))

    lox = np.minimum(sx, pos[idx, 0])[:, None]
    hix = np.maximum(sx, pos[idx, 0])[:, None]
    loy = np.minimum(sy, pos[idx, 1])[:, None]
    hiy = np.maximum(sy, pos[idx, 1])[:, None]
    overlap = ~((boxes[None, :, 2] < lox) | (boxes[None, :, 0] > hix)
                | (boxes[None, :, 3] < loy) | (boxes[None, :, 1] > hiy))
    blocked = (overlap & (edge_hit | inside_s | inside_q)).any(axis=1)
    out[idx[blocked]] = False
    return out


# ---------------------------------------------------------------------------
# fleet motion along piecewise-linear routes (CSR layout)
# ---------------------------------------------------------------------------

@njit(cache=True)
def advance_fleet_numba(pts, cum, offsets, odo, speed, moving, dt, pos, heading, done):
    for i in range(odo.shape[0]):
        if not moving[i]:
            continue
        lo = offsets[i]
        hi = offsets[i + 1] - 1
        total = cum[hi]
        s = odo[i] + speed[i] * dt
        if s >= total:
            odo[i] = total
            pos[i, 0] = pts[hi, 0]
            pos[i, 1] = pts[hi, 1]
            done[i] = True
            continue
        odo[i] = s
        a, b = lo, hi
        while b - a > 1:
            mid = (a + b) // 2
            if cum[mid] <= s:
                a = mid
            else:
                b = mid
        seg = cum[a + 1] - cum[a]
        frac = (s - cum[a]) / seg
        ex = pts[a + 1, 0] - pts[a, 0]
        ey = pts[a + 1, 1] - pts[a, 1]
        pos[i, 0] = pts[a, 0] + frac * ex
        pos[i, 1] = pts[a, 1] + frac * ey
        heading[i, 0] = ex / seg
        heading[i, 1] = ey / seg


def advance_fleet_numpy(pts, cum, offsets, odo, speed, moving, dt, pos, heading, done):
    idx = np.nonzero(moving)[0]
    if idx.size == 0:
        return
    lo = offsets[idx]
    hi = offsets[idx + 1] - 1
    total = cum[hi]
    s = odo[idx] + speed[idx] * dt
    fin = s >= total
    fi, hf = idx[fin], hi[fin]
    odo[fi] = total[fin]
    pos[fi] = pts[hf]
    done[fi] = True

    run = ~fin
    ri, s, lo, hi = idx[run], s[run], lo[run], hi[run]
    if ri.size == 0:
        return
    odo[ri] = s
    # per-vehicle binary search, vectorised across vehicles
    a, b = lo.copy(), hi.copy()
    while True:
        open_ = b - a > 1
        if not open_.any():
            break
        mid = (a + b) // 2
        go = open_ & (cum[mid] <= s)
        stay = open_ & ~go
        a = np.where(go, mid, a)
        b = np.where(stay, mid, b)
    seg = cum[a + 1] - cum[a]
    frac = (s - cum[a]) / seg
    e = pts[a + 1] - pts[a]
    pos[ri] = pts[a] + frac[:, None] * e
    heading[ri] = e / seg[:, None]


if USE_NUMBA:
    link_mask = link_mask_numba
    advance_fleet = advance_fleet_numba
else:
    link_mask = link_mask_numpy
    advance_fleet = advance_fleet_numpy
