"""Generalization operators and plan application."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DegenerateGeometry
from .geometry import (
    ELIMINATED,
    MapObject,
    Polygon,
    Polyline,
    ScaleSpec,
    interior_angles,
    translate,
)


class OperatorKind(str, enum.Enum):
    SIMPLIFY = "simplify"
    DISPLACE = "displace"
    ENLARGE = "enlarge"
    SQUARE = "square"
    ELIMINATE = "eliminate"


#: Flag layout of a gene, per object kind.
KIND_OPERATORS: dict[str, tuple[OperatorKind, ...]] = {
    "building": (
        OperatorKind.SIMPLIFY,
        OperatorKind.DISPLACE,
        OperatorKind.ENLARGE,
        OperatorKind.SQUARE,
        OperatorKind.ELIMINATE,
    ),
    "road": (OperatorKind.SIMPLIFY, OperatorKind.DISPLACE, OperatorKind.ELIMINATE),
}

#: Real-valued parameter layout of a gene, per object kind.
KIND_PARAMS: dict[str, tuple[str, ...]] = {
    "building": ("simplify_tolerance", "displace_dx", "displace_dy", "enlarge_factor"),
    "road": ("simplify_tolerance", "displace_dx", "displace_dy"),
}

_IDENTITY_PARAMS = {
    "simplify_tolerance": 0.0,
    "displace_dx": 0.0,
    "displace_dy": 0.0,
    "enlarge_factor": 1.0,
}

# which flag a parameter belongs to
PARAM_OPERATOR = {
    "simplify_tolerance": OperatorKind.SIMPLIFY,
    "displace_dx": OperatorKind.DISPLACE,
    "displace_dy": OperatorKind.DISPLACE,
    "enlarge_factor": OperatorKind.ENLARGE,
}

_APPLY_ORDER = (
    OperatorKind.SIMPLIFY,
    OperatorKind.SQUARE,
    OperatorKind.ENLARGE,
    OperatorKind.DISPLACE,
)


@dataclass(frozen=True)
class OperatorParams:
    simplify_tolerance: float = 0.0
    displace_dx: float = 0.0
    displace_dy: float = 0.0
    enlarge_factor: float = 1.0


@dataclass(frozen=True)
class Bounds:
    """Search box for the real-valued operator parameters.

    ``lattice``, when set, restricts every parameter to that many evenly
    spaced values between its bounds.
    """

    tol_max: float
    disp_max: float = 10.0
    enl_max: float = 3.0
    angle_tolerance: float = 10.0
    lattice: int | None = None

    def __post_init__(self):
        if self.tol_max < 0 or self.disp_max < 0 or self.enl_max < 1:
            raise ValueError("invalid operator bounds")
        if not 0 < self.angle_tolerance < 45:
            raise ValueError("angle_tolerance must lie in (0, 45) degrees")
        if self.lattice is not None and self.lattice < 2:
            raise ValueError("lattice needs at least two values")

    @classmethod
    def for_scale(cls, spec: ScaleSpec, **kw) -> Bounds:
        return cls(tol_max=2.0 * spec.separation, **kw)

    def param_range(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        lo = {"simplify_tolerance": 0.0, "displace_dx": -self.disp_max,
              "displace_dy": -self.disp_max, "enlarge_factor": 1.0}
        hi = {"simplify_tolerance": self.tol_max, "displace_dx": self.disp_max,
              "displace_dy": self.disp_max, "enlarge_factor": self.enl_max}
        names = KIND_PARAMS[kind]
        return np.array([lo[n] for n in names]), np.array([hi[n] for n in names])

    def lattice_values(self, kind: str) -> list[np.ndarray] | None:
        if self.lattice is None:
            return None
        lo, hi = self.param_range(kind)
        return [np.linspace(a, b, self.lattice) for a, b in zip(lo, hi)]


def identity_params(kind: str) -> np.ndarray:
    return np.array([_IDENTITY_PARAMS[n] for n in KIND_PARAMS[kind]])


# ----------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------


def simplify_line(line: Polyline, tolerance: float) -> Polyline:
    """Douglas-Peucker; a vertex is dropped only when closer than ``tolerance``."""
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    if tolerance == 0 or len(line) <= 2:
        return line
    keep = kernels.douglas_peucker(line.coords, float(tolerance))
    if keep.all():
        return line
    return Polyline(line.coords[keep], trusted=True)


def simplify_building(poly: Polygon, tolerance: float) -> Polygon:
    """Douglas-Peucker on the closed ring, anchored at two extreme vertices.

    Falls back to ``poly`` when the result would have fewer than four
    vertices or would not be simple.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    n = len(poly)
    if tolerance == 0 or n <= 4:
        return poly
    ring = poly.ring
    start = int(np.lexsort((ring[:, 1], ring[:, 0]))[0])
    r = np.roll(ring, -start, axis=0)
    far = int(np.argmax(np.hypot(r[:, 0] - r[0, 0], r[:, 1] - r[0, 1])))
    first = kernels.douglas_peucker(np.ascontiguousarray(r[:far + 1]), float(tolerance))
    second = kernels.douglas_peucker(np.ascontiguousarray(np.vstack((r[far:], r[:1]))), float(tolerance))
    keep = np.concatenate((first, second[1:-1]))
    if keep.all() or keep.sum() < 4:
        return poly
    out = r[keep]
    if not kernels.ring_is_simple(np.ascontiguousarray(out)):
        return poly
    result = Polygon(out, trusted=True)
    if result.area <= 0:
        return poly
    return result


def displace(g, dx: float, dy: float):
    if dx == 0 and dy == 0:
        return g
    return translate(g, dx, dy)


def enlarge(poly: Polygon, factor: float) -> Polygon:
    """Scale about the centroid."""
    if factor < 1:
        raise ValueError("enlarge factor must be >= 1")
    if factor == 1:
        return poly
    c = np.array(poly.centroid)
    return Polygon(c + factor * (poly.ring - c), trusted=True)


def _orthogonal_deviation(angles: np.ndarray) -> np.ndarray:
    return np.abs(np.mod(angles, 180.0) - 90.0)


def square_building(poly: Polygon, angle_tolerance: float) -> Polygon:
    """Snap near-orthogonal corners to exactly 90 degrees.

    Edges incident to a near-orthogonal corner and lying within
    ``angle_tolerance`` of the polygon's dominant orientation are rotated
    about their midpoints onto that orthogonal grid; vertices are rebuilt as
    intersections of consecutive edge lines. Identity when nothing qualifies
    or the result is not a simple polygon.
    """
    if not 0 < angle_tolerance < 45:
        raise ValueError("angle_tolerance must lie in (0, 45)")
    ring = poly.ring
    n = len(ring)
    dev = _orthogonal_deviation(interior_angles(poly))
    near = dev <= angle_tolerance
    if not near.any() or (dev[near] <= 1e-9).all():
        return poly

    edge = np.roll(ring, -1, axis=0) - ring
    length = np.hypot(edge[:, 0], edge[:, 1])
    theta = np.arctan2(edge[:, 1], edge[:, 0])
    # length-weighted circular mean on the 90-degree period
    phi = math.atan2(float((length * np.sin(4 * theta)).sum()), float((length * np.cos(4 * theta)).sum())) / 4.0
    quarter = math.pi / 2
    k = np.round((theta - phi) / quarter)
    edge_dev = np.degrees(np.abs(theta - phi - k * quarter))
    # edge i joins vertex i and vertex i+1
    touches_near = near | np.roll(near, -1)
    snap = touches_near & (edge_dev <= angle_tolerance)
    if not snap.any():
        return poly
    direction = np.where(snap, phi + k * quarter, theta)
    ux = np.cos(direction)
    uy = np.sin(direction)
    mid = ring + 0.5 * edge

    out = ring.copy()
    for v in range(n):
        a = v - 1  # incoming edge
        b = v
        if not (snap[a] or snap[b]):
            continue
        cross = ux[a] * uy[b] - uy[a] * ux[b]
        if abs(cross) < 1e-9:
            return poly
        w = mid[b] - mid[a]
        t = (w[0] * uy[b] - w[1] * ux[b]) / cross
        out[v] = mid[a] + t * np.array([ux[a], uy[a]])
    if not np.isfinite(out).all() or not kernels.ring_is_simple(np.ascontiguousarray(out)):
        return poly
    result = Polygon(out, trusted=True)
    if result.area <= 0:
        return poly
    return result


# ----------------------------------------------------------------------
# plan application
# ----------------------------------------------------------------------


class PlanOutcome(NamedTuple):
    """Result of applying a plan to an object.

    ``shaped`` is the geometry after the shape operators and before
    displacement; shape loss is measured on it.
    """

    geometry: object
    shaped: object
    dx: float
    dy: float
    applied: tuple[str, ...]
    fallbacks: tuple[str, ...]

    @property
    def eliminated(self) -> bool:
        return self.geometry is ELIMINATED


def plan_flags(kind: str, flags) -> dict[OperatorKind, bool]:
    ops = KIND_OPERATORS[kind]
    if len(flags) != len(ops):
        raise ValueError(f"{kind} gene needs {len(ops)} flags, got {len(flags)}")
    return {op: bool(f) for op, f in zip(ops, flags)}


def apply_plan(obj: MapObject, chrom, bounds: Bounds) -> PlanOutcome:
    """Apply the operators whose flags are set, in canonical order.

    ``chrom`` is a :class:`genagent.genome.Chromosome` (or anything with a
    ``gene`` carrying ``flags`` and ``params``).
    """
    gene = chrom.gene
    on = plan_flags(obj.kind, gene.flags)
    params = dict(zip(KIND_PARAMS[obj.kind], (float(p) for p in gene.params)))
    if on[OperatorKind.ELIMINATE]:
        return PlanOutcome(ELIMINATED, ELIMINATED, 0.0, 0.0, (OperatorKind.ELIMINATE.value,), ())

    g = obj.geometry
    applied: list[str] = []
    fallbacks: list[str] = []
    dx = dy = 0.0
    shaped = g
    for op in _APPLY_ORDER:
        if not on.get(op, False):
            continue
        if op is OperatorKind.DISPLACE:
            shaped = g
        try:
            if op is OperatorKind.SIMPLIFY:
                tol = params["simplify_tolerance"]
                g = simplify_line(g, tol) if isinstance(g, Polyline) else simplify_building(g, tol)
            elif op is OperatorKind.SQUARE:
                g = square_building(g, bounds.angle_tolerance)
            elif op is OperatorKind.ENLARGE:
                g = enlarge(g, params["enlarge_factor"])
            elif op is OperatorKind.DISPLACE:
                dx, dy = params["displace_dx"], params["displace_dy"]
                g = displace(g, dx, dy)
        except (DegenerateGeometry, ValueError, ZeroDivisionError, FloatingPointError):
            fallbacks.append(op.value)
            if op is OperatorKind.DISPLACE:
                dx = dy = 0.0
            continue
        applied.append(op.value)
    if not on[OperatorKind.DISPLACE]:
        shaped = g
    return PlanOutcome(g, shaped, dx, dy, tuple(applied), tuple(fallbacks))
