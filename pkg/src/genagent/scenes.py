"""Synthetic scenes for tests, benchmarks and the bundled sample."""
from __future__ import annotations

import math

import numpy as np

from .geometry import MapObject, Polygon, Polyline


def rectangle(x: float, y: float, w: float, h: float, angle: float = 0.0) -> Polygon:
    """Axis-aligned (then rotated by ``angle`` degrees about its center) rectangle."""
    pts = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]) - (w / 2, h / 2)
    if angle:
        a = math.radians(angle)
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        pts = pts @ rot.T
    return Polygon(pts + (x + w / 2, y + h / 2))


def synthetic_town(seed: int = 42, streets: int = 5, street_gap: float = 40.0,
                   length: float = 120.0) -> list[MapObject]:
    """Parallel streets with a row of buildings on each side of every block.

    Coordinates are ground meters as captured at 1:1000. Gaps between
    neighboring buildings and set-backs from the street are drawn so that a
    part of them falls under the legibility limits of 1:1500.
    """
    rng = np.random.default_rng(seed)
    objects: list[MapObject] = []
    for s in range(streets):
        y0 = s * street_gap
        xs = np.arange(0.0, length + 1e-9, 10.0)
        ys = y0 + rng.uniform(-0.1, 0.1, size=len(xs))
        ys[0] = ys[-1] = y0
        objects.append(MapObject(f"road-{s}", "road", Polyline(np.column_stack((xs, ys)))))
    n = 0
    for s in range(streets - 1):
        lower = s * street_gap
        upper = lower + street_gap
        for side in ("front", "back"):
            x = 2.0
            while True:
                w = rng.uniform(9.0, 16.0)
                h = rng.uniform(8.0, 13.0)
                if x + w > length - 2.0:
                    break
                setback = rng.choice([0.7, 1.5, 2.5, 4.0])
                y = lower + setback if side == "front" else upper - setback - h
                objects.append(MapObject(f"bldg-{n}", "building", rectangle(x, y, w, h)))
                n += 1
                x += w + rng.choice([0.2, 0.6, 1.2, 3.0])
    return objects


def random_scene(rng: np.random.Generator, n: int, extent: float = 60.0,
                 road_share: float = 0.15) -> list[MapObject]:
    """Randomly placed rectangles and short polylines, overlaps allowed."""
    objects = []
    for i in range(n):
        if rng.random() < road_share:
            k = int(rng.integers(2, 6))
            start = rng.uniform(0, extent, size=2)
            steps = rng.normal(0, 4.0, size=(k - 1, 2))
            pts = np.vstack((start, start + np.cumsum(steps, axis=0)))
            objects.append(MapObject(f"r{i}", "road", Polyline(pts)))
        else:
            x, y = rng.uniform(0, extent, size=2)
            w, h = rng.uniform(1.0, 8.0, size=2)
            objects.append(MapObject(f"b{i}", "building", rectangle(x, y, w, h, float(rng.uniform(0, 90)))))
    return objects
