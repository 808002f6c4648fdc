"""Hot geometry kernels.

Every kernel exists twice: a numba loop version (``nb_*``) and a vectorized
numpy version (``np_*``). The unprefixed names are bound to one of them at
import time according to :data:`genagent._accel.USE_NUMBA`.

Multi-part geometries are passed packed: ``coords`` is an ``(N, 2)`` float64
array, ``offsets`` an int64 array of length ``parts + 1`` delimiting each
part, and ``closed`` a bool array marking parts that are polygon rings
(implicitly closed, interior counts as inside). Open parts are polylines; a
one-vertex open part is a point.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ----------------------------------------------------------------------
# numba scalar helpers
# ----------------------------------------------------------------------


@njit
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit
def _within_box(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


@njit
def _segments_touch(ax, ay, bx, by, cx, cy, dx, dy):
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and ((o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)):
        return True
    if o1 == 0 and _within_box(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _within_box(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _within_box(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _within_box(cx, cy, dx, dy, bx, by):
        return True
    return False


@njit
def _point_segment_d2(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    wx = px - ax
    wy = py - ay
    den = vx * vx + vy * vy
    if den == 0.0:
        return wx * wx + wy * wy
    t = (wx * vx + wy * vy) / den
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = wx - t * vx
    ey = wy - t * vy
    return ex * ex + ey * ey


@njit
def _segment_distance(ax, ay, bx, by, cx, cy, dx, dy):
    if _segments_touch(ax, ay, bx, by, cx, cy, dx, dy):
        return 0.0
    d = _point_segment_d2(ax, ay, cx, cy, dx, dy)
    d = min(d, _point_segment_d2(bx, by, cx, cy, dx, dy))
    d = min(d, _point_segment_d2(cx, cy, ax, ay, bx, by))
    d = min(d, _point_segment_d2(dx, dy, ax, ay, bx, by))
    return math.sqrt(d)


@njit
def _point_in_ring(px, py, coords, start, stop):
    inside = False
    j = stop - 1
    for i in range(start, stop):
        xi = coords[i, 0]
        yi = coords[i, 1]
        xj = coords[j, 0]
        yj = coords[j, 1]
        if (yi > py) != (yj > py):
            xc = xi + (py - yi) * (xj - xi) / (yj - yi)
            if px < xc:
                inside = not inside
        j = i
    return inside


# ----------------------------------------------------------------------
# multipart distance
# ----------------------------------------------------------------------


@njit
def nb_parts_distance(ca, oa, fa, cb, ob, fb):
    best = np.inf
    na = oa.shape[0] - 1
    nb_ = ob.shape[0] - 1
    for p in range(na):
        s0 = oa[p]
        s1 = oa[p + 1]
        axmin = ca[s0:s1, 0].min()
        axmax = ca[s0:s1, 0].max()
        aymin = ca[s0:s1, 1].min()
        aymax = ca[s0:s1, 1].max()
        nsa = s1 - s0 if fa[p] else max(s1 - s0 - 1, 1)
        for q in range(nb_):
            t0 = ob[q]
            t1 = ob[q + 1]
            bxmin = cb[t0:t1, 0].min()
            bxmax = cb[t0:t1, 0].max()
            bymin = cb[t0:t1, 1].min()
            bymax = cb[t0:t1, 1].max()
            gx = max(0.0, max(axmin, bxmin) - min(axmax, bxmax))
            gy = max(0.0, max(aymin, bymin) - min(aymax, bymax))
            if math.sqrt(gx * gx + gy * gy) >= best:
                continue
            if fa[p] and _point_in_ring(cb[t0, 0], cb[t0, 1], ca, s0, s1):
                return 0.0
            if fb[q] and _point_in_ring(ca[s0, 0], ca[s0, 1], cb, t0, t1):
                return 0.0
            nsb = t1 - t0 if fb[q] else max(t1 - t0 - 1, 1)
            for i in range(nsa):
                i0 = s0 + i
                i1 = s0 + (i + 1) % (s1 - s0)
                for j in range(nsb):
                    j0 = t0 + j
                    j1 = t0 + (j + 1) % (t1 - t0)
                    d = _segment_distance(
                        ca[i0, 0], ca[i0, 1], ca[i1, 0], ca[i1, 1],
                        cb[j0, 0], cb[j0, 1], cb[j1, 0], cb[j1, 1],
                    )
                    if d < best:
                        best = d
                        if best == 0.0:
                            return 0.0
    return best


def _segments_of(coords, offsets, closed):
    starts = []
    ends = []
    for p in range(len(offsets) - 1):
        part = coords[offsets[p]:offsets[p + 1]]
        if closed[p]:
            starts.append(part)
            ends.append(np.concatenate((part[1:], part[:1])))
        elif len(part) == 1:
            starts.append(part)
            ends.append(part)
        else:
            starts.append(part[:-1])
            ends.append(part[1:])
    return np.concatenate(starts), np.concatenate(ends)


def _np_orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _np_within_box(ax, ay, bx, by, px, py):
    return ((np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by)))


def _np_point_segment_d2(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    wx = px - ax
    wy = py - ay
    den = vx * vx + vy * vy
    degenerate = den == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip((wx * vx + wy * vy) / den, 0.0, 1.0)
    t = np.where(degenerate, 0.0, t)
    ex = wx - t * vx
    ey = wy - t * vy
    return ex * ex + ey * ey


def np_segment_distance_matrix(a0, a1, b0, b1):
    """Pairwise segment distances, shape ``(len(a0), len(b0))``."""
    ax, ay = a0[:, :1], a0[:, 1:]
    bx, by = a1[:, :1], a1[:, 1:]
    cx, cy = b0[None, :, 0], b0[None, :, 1]
    dx, dy = b1[None, :, 0], b1[None, :, 1]
    o1 = _np_orient(ax, ay, bx, by, cx, cy)
    o2 = _np_orient(ax, ay, bx, by, dx, dy)
    o3 = _np_orient(cx, cy, dx, dy, ax, ay)
    o4 = _np_orient(cx, cy, dx, dy, bx, by)
    touch = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    touch |= (o1 == 0) & _np_within_box(ax, ay, bx, by, cx, cy)
    touch |= (o2 == 0) & _np_within_box(ax, ay, bx, by, dx, dy)
    touch |= (o3 == 0) & _np_within_box(cx, cy, dx, dy, ax, ay)
    touch |= (o4 == 0) & _np_within_box(cx, cy, dx, dy, bx, by)
    d2 = np.minimum(
        np.minimum(_np_point_segment_d2(ax, ay, cx, cy, dx, dy), _np_point_segment_d2(bx, by, cx, cy, dx, dy)),
        np.minimum(_np_point_segment_d2(cx, cy, ax, ay, bx, by), _np_point_segment_d2(dx, dy, ax, ay, bx, by)),
    )
    return np.where(touch, 0.0, np.sqrt(d2))


def _np_point_in_ring(p, ring):
    px, py = p[0], p[1]
    xi = ring[:, 0]
    yi = ring[:, 1]
    if px < xi.min() or px > xi.max() or py < yi.min() or py > yi.max():
        return False
    xj = np.concatenate((xi[-1:], xi[:-1]))
    yj = np.concatenate((yi[-1:], yi[:-1]))
    crosses = (yi > py) != (yj > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xi + (py - yi) * (xj - xi) / (yj - yi)
    return bool(np.count_nonzero(crosses & (px < xc)) % 2)


def np_parts_distance(ca, oa, fa, cb, ob, fb):
    for p in range(len(oa) - 1):
        if fa[p]:
            ring = ca[oa[p]:oa[p + 1]]
            for q in range(len(ob) - 1):
                if _np_point_in_ring(cb[ob[q]], ring):
                    return 0.0
    for q in range(len(ob) - 1):
        if fb[q]:
            ring = cb[ob[q]:ob[q + 1]]
            for p in range(len(oa) - 1):
                if _np_point_in_ring(ca[oa[p]], ring):
                    return 0.0
    a0, a1 = _segments_of(ca, oa, fa)
    b0, b1 = _segments_of(cb, ob, fb)
    return float(np_segment_distance_matrix(a0, a1, b0, b1).min())


# ----------------------------------------------------------------------
# ring simplicity
# ----------------------------------------------------------------------


@njit
def nb_ring_is_simple(ring):
    n = ring.shape[0]
    if n < 3:
        return False
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        c = ring[(i + 2) % n]
        if a[0] == b[0] and a[1] == b[1]:
            return False
        if _orient(a[0], a[1], b[0], b[1], c[0], c[1]) == 0.0:
            if (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]) < 0.0:
                return False
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            c = ring[j]
            d = ring[(j + 1) % n]
            if _segments_touch(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]):
                return False
    return True


def np_ring_is_simple(ring):
    n = len(ring)
    if n < 3:
        return False
    a = ring
    b = np.roll(ring, -1, axis=0)
    c = np.roll(ring, -2, axis=0)
    if np.any((a == b).all(axis=1)):
        return False
    turn = _np_orient(a[:, 0], a[:, 1], b[:, 0], b[:, 1], c[:, 0], c[:, 1])
    spike = (turn == 0.0) & (((b - a) * (c - b)).sum(axis=1) < 0.0)
    if spike.any():
        return False
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i = i[keep]
    j = j[keep]
    if len(i) == 0:
        return True
    ax, ay, bx, by = a[i, 0], a[i, 1], b[i, 0], b[i, 1]
    cx, cy, dx, dy = a[j, 0], a[j, 1], b[j, 0], b[j, 1]
    o1 = _np_orient(ax, ay, bx, by, cx, cy)
    o2 = _np_orient(ax, ay, bx, by, dx, dy)
    o3 = _np_orient(cx, cy, dx, dy, ax, ay)
    o4 = _np_orient(cx, cy, dx, dy, bx, by)
    touch = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    touch |= (o1 == 0) & _np_within_box(ax, ay, bx, by, cx, cy)
    touch |= (o2 == 0) & _np_within_box(ax, ay, bx, by, dx, dy)
    touch |= (o3 == 0) & _np_within_box(cx, cy, dx, dy, ax, ay)
    touch |= (o4 == 0) & _np_within_box(cx, cy, dx, dy, bx, by)
    return not bool(touch.any())


# ----------------------------------------------------------------------
# Douglas-Peucker keep mask
# ----------------------------------------------------------------------


@njit
def nb_douglas_peucker(coords, tol):
    n = coords.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return keep
    keep[0] = True
    keep[n - 1] = True
    if tol <= 0.0:
        keep[:] = True
        return keep
    stack = np.empty((n, 2), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n - 1
    top = 1
    while top > 0:
        top -= 1
        s = stack[top, 0]
        e = stack[top, 1]
        dmax = -1.0
        idx = -1
        for i in range(s + 1, e):
            d = math.sqrt(_point_segment_d2(
                coords[i, 0], coords[i, 1], coords[s, 0], coords[s, 1], coords[e, 0], coords[e, 1]
            ))
            if d > dmax:
                dmax = d
                idx = i
        if idx >= 0 and dmax >= tol:
            keep[idx] = True
            stack[top, 0] = s
            stack[top, 1] = idx
            stack[top + 1, 0] = idx
            stack[top + 1, 1] = e
            top += 2
    return keep


def np_douglas_peucker(coords, tol):
    n = len(coords)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    keep[0] = keep[-1] = True
    if tol <= 0.0:
        keep[:] = True
        return keep
    stack = [(0, n - 1)]
    while stack:
        s, e = stack.pop()
        if e - s < 2:
            continue
        inner = coords[s + 1:e]
        d = np.sqrt(_np_point_segment_d2(inner[:, 0], inner[:, 1], coords[s, 0], coords[s, 1],
                                         coords[e, 0], coords[e, 1]))
        k = int(np.argmax(d))
        if d[k] >= tol:
            idx = s + 1 + k
            keep[idx] = True
            stack.append((s, idx))
            stack.append((idx, e))
    return keep


if USE_NUMBA:
    parts_distance = nb_parts_distance
    ring_is_simple = nb_ring_is_simple
    douglas_peucker = nb_douglas_peucker
else:
    parts_distance = np_parts_distance
    ring_is_simple = np_ring_is_simple
    douglas_peucker = np_douglas_peucker

BACKEND = "numba" if USE_NUMBA else "numpy"


def warmup() -> None:
    """Trigger JIT compilation of the active kernels on tiny inputs."""
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    off = np.array([0, 4], dtype=np.int64)
    flag = np.array([True])
    parts_distance(sq, off, flag, sq + 2.0, off, flag)
    ring_is_simple(sq)
    douglas_peucker(sq, 0.1)
