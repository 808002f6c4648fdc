"""Planar vector geometry in ground meters plus scale arithmetic.

Geometries are immutable wrappers around read-only ``(n, 2)`` float64
arrays. Polygons are stored open (no repeated closing vertex) and oriented
counter-clockwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from . import kernels
from .errors import DegenerateGeometry, EndpointMismatch


class Point2(NamedTuple):
    x: float
    y: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _as_coords(vertices) -> np.ndarray:
    a = np.array(vertices, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise DegenerateGeometry(f"expected a sequence of (x, y) pairs, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise DegenerateGeometry("coordinates must be finite")
    return a


def _drop_repeats(a: np.ndarray) -> np.ndarray:
    if len(a) < 2:
        return a
    same = (a[1:] == a[:-1]).all(axis=1)
    return a[np.concatenate(([True], ~same))]


def _shoelace(ring: np.ndarray) -> float:
    x = ring[:, 0]
    y = ring[:, 1]
    # shifted to the first vertex to limit cancellation at large coordinates
    x = x - x[0]
    y = y - y[0]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polyline:
    """Open polyline with at least two distinct consecutive vertices."""

    __slots__ = ("coords",)
    kind = "road"

    def __init__(self, vertices, *, trusted: bool = False):
        if trusted:
            self.coords = _frozen(vertices)
            return
        a = _drop_repeats(_as_coords(vertices))
        if len(a) < 2:
            raise DegenerateGeometry("polyline needs at least two distinct vertices")
        self.coords = _frozen(a)

    @property
    def vertices(self) -> list[Point2]:
        return [Point2(float(x), float(y)) for x, y in self.coords]

    @property
    def length(self) -> float:
        return float(np.hypot(*np.diff(self.coords, axis=0).T).sum())

    @property
    def centroid(self) -> Point2:
        seg = np.diff(self.coords, axis=0)
        w = np.hypot(seg[:, 0], seg[:, 1])
        mid = 0.5 * (self.coords[1:] + self.coords[:-1])
        c = (mid * w[:, None]).sum(axis=0) / w.sum()
        return Point2(float(c[0]), float(c[1]))

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.coords.min(axis=0)
        hi = self.coords.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __len__(self) -> int:
        return len(self.coords)

    def __eq__(self, other) -> bool:
        return type(other) is Polyline and np.array_equal(self.coords, other.coords)

    def __hash__(self) -> int:
        return hash((Polyline, self.coords.tobytes()))

    def __repr__(self) -> str:
        return f"Polyline({self.coords.tolist()!r})"


class Polygon:
    """Simple polygon, counter-clockwise, implicitly closed."""

    __slots__ = ("ring", "_area")
    kind = "building"

    def __init__(self, ring, *, trusted: bool = False):
        if trusted:
            self.ring = _frozen(ring)
            self._area = _shoelace(self.ring)
            return
        a = _drop_repeats(_as_coords(ring))
        if len(a) > 1 and (a[0] == a[-1]).all():
            a = a[:-1]
        if len(a) < 3:
            raise DegenerateGeometry("polygon ring needs at least three distinct vertices")
        area = _shoelace(a)
        if area == 0.0 or abs(area) <= 1e-12 * _extent2(a):
            raise DegenerateGeometry("polygon ring has zero area")
        if area < 0:
            a = a[::-1]
            area = -area
        if not kernels.ring_is_simple(np.ascontiguousarray(a)):
            raise DegenerateGeometry("polygon ring self-intersects")
        self.ring = _frozen(a)
        self._area = area

    @property
    def coords(self) -> np.ndarray:
        return self.ring

    @property
    def vertices(self) -> list[Point2]:
        return [Point2(float(x), float(y)) for x, y in self.ring]

    @property
    def area(self) -> float:
        return self._area

    @property
    def perimeter(self) -> float:
        d = np.roll(self.ring, -1, axis=0) - self.ring
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    @property
    def centroid(self) -> Point2:
        o = self.ring[0]
        r = self.ring - o
        x, y = r[:, 0], r[:, 1]
        x1, y1 = np.roll(x, -1), np.roll(y, -1)
        cross = x * y1 - x1 * y
        a = cross.sum() * 0.5
        cx = ((x + x1) * cross).sum() / (6.0 * a)
        cy = ((y + y1) * cross).sum() / (6.0 * a)
        return Point2(float(cx + o[0]), float(cy + o[1]))

    def edge_lengths(self) -> np.ndarray:
        d = np.roll(self.ring, -1, axis=0) - self.ring
        return np.hypot(d[:, 0], d[:, 1])

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.ring.min(axis=0)
        hi = self.ring.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __len__(self) -> int:
        return len(self.ring)

    def __eq__(self, other) -> bool:
        return type(other) is Polygon and np.array_equal(self.ring, other.ring)

    def __hash__(self) -> int:
        return hash((Polygon, self.ring.tobytes()))

    def __repr__(self) -> str:
        return f"Polygon({self.ring.tolist()!r})"


def _extent2(a: np.ndarray) -> float:
    span = a.max(axis=0) - a.min(axis=0)
    return float(span[0] * span[0] + span[1] * span[1])


class _Eliminated:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ELIMINATED"

    def __reduce__(self):
        return (_Eliminated, ())


#: Marker returned in place of a geometry for eliminated objects.
ELIMINATED = _Eliminated()

Geometry = Union[Point2, Polyline, Polygon]


@dataclass(frozen=True)
class ScaleSpec:
    """Source/target scale denominators and legibility limits in map mm."""

    source_denominator: float
    target_denominator: float
    min_symbol_side_mm: float = 0.4
    min_separation_mm: float = 0.2

    def __post_init__(self):
        if not (self.source_denominator > 0 and self.target_denominator > 0):
            raise ValueError("scale denominators must be positive")
        if self.target_denominator < self.source_denominator:
            raise ValueError(
                f"target scale 1:{self.target_denominator:g} is larger than source "
                f"1:{self.source_denominator:g}; only reduction is supported"
            )
        if not (self.min_symbol_side_mm > 0 and self.min_separation_mm > 0):
            raise ValueError("legibility thresholds must be positive")

    @property
    def min_side(self) -> float:
        """Minimum legible edge length, ground meters."""
        return ground_threshold(self, self.min_symbol_side_mm)

    @property
    def min_area(self) -> float:
        return self.min_side ** 2

    @property
    def separation(self) -> float:
        """Minimum legible separation, ground meters."""
        return ground_threshold(self, self.min_separation_mm)


def ground_threshold(spec: ScaleSpec, mm: float) -> float:
    """Convert map millimeters at the target scale into ground meters."""
    if not mm > 0:
        raise ValueError("mm must be positive")
    return mm * spec.target_denominator / 1000.0


def polygon_area(p: Polygon) -> float:
    area = _shoelace(p.ring)
    if area == 0.0:
        raise DegenerateGeometry("polygon ring has zero area")
    return abs(area)


# ----------------------------------------------------------------------
# packed parts, shared with the conflict machinery
# ----------------------------------------------------------------------


class Parts(NamedTuple):
    coords: np.ndarray
    offsets: np.ndarray
    closed: np.ndarray


def to_parts(g) -> Parts:
    if isinstance(g, Parts):
        return g
    if isinstance(g, Polygon):
        return Parts(g.ring, np.array([0, len(g.ring)], dtype=np.int64), np.array([True]))
    if isinstance(g, Polyline):
        return Parts(g.coords, np.array([0, len(g.coords)], dtype=np.int64), np.array([False]))
    if isinstance(g, tuple) and len(g) == 2:
        return Parts(np.array([g], dtype=np.float64), np.array([0, 1], dtype=np.int64), np.array([False]))
    raise TypeError(f"not a geometry: {g!r}")


def pack(pieces: list[Parts]) -> Parts:
    coords = np.concatenate([p.coords for p in pieces])
    sizes = np.concatenate([np.diff(p.offsets) for p in pieces])
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    closed = np.concatenate([p.closed for p in pieces])
    return Parts(coords, offsets, closed)


def parts_bounds(p: Parts) -> tuple[float, float, float, float]:
    lo = p.coords.min(axis=0)
    hi = p.coords.max(axis=0)
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def min_separation(a, b) -> float:
    """Minimum Euclidean distance between two geometries, 0 if they touch or overlap."""
    pa = to_parts(a)
    pb = to_parts(b)
    return float(kernels.parts_distance(pa.coords, pa.offsets, pa.closed, pb.coords, pb.offsets, pb.closed))


# ----------------------------------------------------------------------
# areal displacement
# ----------------------------------------------------------------------


def _crossing_xs(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """x coordinates of all proper edge crossings in the closed curve."""
    n = len(p0)
    i, j = np.triu_indices(n, k=1)
    a0, a1, b0, b1 = p0[i], p1[i], p0[j], p1[j]
    r = a1 - a0
    s = b1 - b0
    den = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    ok = den != 0.0
    qp = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / den
        u = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / den
    hit = ok & (t > 0.0) & (t < 1.0) & (u > 0.0) & (u < 1.0)
    return a0[hit, 0] + t[hit] * r[hit, 0]


def enclosed_area(curve: np.ndarray) -> float:
    """Unsigned area of a closed, possibly self-intersecting curve.

    Integrates the absolute winding number over the plane by vertical slab
    decomposition: inside a slab free of vertices and crossings every edge
    spanning it is a straight band, so the area is a sum of trapezoids.
    """
    p0 = curve
    p1 = np.roll(curve, -1, axis=0)
    xs = np.unique(np.concatenate((curve[:, 0], _crossing_xs(p0, p1))))
    if len(xs) < 2:
        return 0.0
    dx = p1[:, 0] - p0[:, 0]
    moving = dx != 0.0
    p0, p1, dx = p0[moving], p1[moving], dx[moving]
    slope = (p1[:, 1] - p0[:, 1]) / dx
    direction = np.sign(dx)
    lo = np.minimum(p0[:, 0], p1[:, 0])
    hi = np.maximum(p0[:, 0], p1[:, 0])
    total = 0.0
    for xl, xr in zip(xs[:-1], xs[1:]):
        xm = 0.5 * (xl + xr)
        span = (lo <= xl) & (hi >= xr)
        if not span.any():
            continue
        ym = p0[span, 1] + slope[span] * (xm - p0[span, 0])
        order = np.argsort(ym, kind="stable")
        ys = ym[order]
        winding = np.cumsum(direction[span][order])
        # at the slab midline a trapezoid's mean height equals its midline height
        total += float((np.abs(winding[:-1]) * np.diff(ys)).sum()) * (xr - xl)
    return total


def areal_displacement(original: Polyline, simplified: Polyline) -> float:
    """Total unsigned area enclosed between two polylines sharing their endpoints."""
    a = original.coords
    b = simplified.coords
    if not (np.array_equal(a[0], b[0]) and np.array_equal(a[-1], b[-1])):
        raise EndpointMismatch("polylines must share first and last vertex")
    if np.array_equal(a, b):
        return 0.0
    curve = np.concatenate((a, b[-2:0:-1])) if len(b) > 2 else a.copy()
    return enclosed_area(curve)


def translate(g, dx: float, dy: float):
    if isinstance(g, Polygon):
        return Polygon(g.ring + (dx, dy), trusted=True)
    if isinstance(g, Polyline):
        return Polyline(g.coords + (dx, dy), trusted=True)
    raise TypeError(f"not a geometry: {g!r}")


def interior_angles(p: Polygon) -> np.ndarray:
    """Interior angle at each vertex in degrees (ring is CCW)."""
    r = p.ring
    prev = np.roll(r, 1, axis=0) - r
    nxt = np.roll(r, -1, axis=0) - r
    a = np.arctan2(prev[:, 1], prev[:, 0]) - np.arctan2(nxt[:, 1], nxt[:, 0])
    return np.degrees(np.mod(a, 2.0 * math.pi))


@dataclass(frozen=True, eq=False)
class MapObject:
    """A map feature: identity, kind (``"building"`` or ``"road"``) and source geometry."""

    id: str
    kind: str
    geometry: Polygon | Polyline
    properties: dict | None = None
    source_geometry: dict | None = None

    def __post_init__(self):
        expected = Polygon if self.kind == "building" else Polyline if self.kind == "road" else None
        if expected is None:
            raise ValueError(f"unknown object kind {self.kind!r}")
        if not isinstance(self.geometry, expected):
            raise TypeError(f"{self.kind} {self.id!r} needs a {expected.__name__}")
