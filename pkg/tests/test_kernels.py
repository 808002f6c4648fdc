"""Compiled and pure-numpy kernels must agree with each other and with shapely.

Without numba installed the ``nb_`` kernels run as plain Python.
"""
import os
import subprocess
import sys

import numpy as np
import pytest
import shapely

from genagent import kernels
from genagent._accel import HAS_NUMBA
from genagent.geometry import Parts, pack



def random_parts(rng, closed_share=0.5, max_parts=3):
    pieces = []
    for _ in range(int(rng.integers(1, max_parts + 1))):
        closed = bool(rng.random() < closed_share)
        c = rng.uniform(0, 6, size=2)
        if closed:
            k = int(rng.integers(3, 7))
            ang = np.sort(rng.uniform(0, 2 * np.pi, k))
            rad = rng.uniform(0.5, 2.0, k)
            pts = c + np.column_stack((np.cos(ang) * rad, np.sin(ang) * rad))
        else:
            pts = c + np.cumsum(rng.normal(0, 1.0, size=(int(rng.integers(2, 6)), 2)), axis=0)
        pieces.append(Parts(pts, np.array([0, len(pts)], np.int64), np.array([closed])))
    return pack(pieces)


def to_shapely(p: Parts):
    geoms = []
    for i in range(len(p.offsets) - 1):
        pts = p.coords[p.offsets[i]:p.offsets[i + 1]]
        geoms.append(shapely.Polygon(pts) if p.closed[i] else shapely.LineString(pts))
    return shapely.GeometryCollection(geoms)


def dist(fn, a, b):
    return fn(a.coords, a.offsets, a.closed, b.coords, b.offsets, b.closed)


def test_numpy_distance_matches_shapely(rng):
    checked = 0
    for _ in range(300):
        a, b = random_parts(rng), random_parts(rng)
        sa, sb = to_shapely(a), to_shapely(b)
        if not all(g.is_valid for g in sa.geoms) or not all(g.is_valid for g in sb.geoms):
            continue
        assert dist(kernels.np_parts_distance, a, b) == pytest.approx(sa.distance(sb), abs=1e-9)
        checked += 1
    assert checked > 200


def test_backends_agree_on_distance(rng):
    for _ in range(500):
        a, b = random_parts(rng), random_parts(rng)
        assert dist(kernels.nb_parts_distance, a, b) == pytest.approx(dist(kernels.np_parts_distance, a, b), abs=1e-12)


def test_backends_agree_on_simplicity(rng):
    for _ in range(300):
        ring = rng.uniform(0, 4, size=(int(rng.integers(3, 8)), 2))
        expected = shapely.LinearRing(ring).is_simple
        assert bool(kernels.nb_ring_is_simple(ring)) == expected
        assert bool(kernels.np_ring_is_simple(ring)) == expected


def reference_dp(pts, tol):
    """Textbook recursive Douglas-Peucker keep mask."""
    keep = np.zeros(len(pts), bool)
    keep[0] = keep[-1] = True

    def seg_dist(p, a, b):
        ab = b - a
        t = 0.0 if not ab.any() else np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0, 1)
        return np.hypot(*(p - (a + t * ab)))

    def rec(i, j):
        if j <= i + 1:
            return
        d = [seg_dist(pts[k], pts[i], pts[j]) for k in range(i + 1, j)]
        k = int(np.argmax(d))
        if d[k] >= tol:
            keep[i + 1 + k] = True
            rec(i, i + 1 + k)
            rec(i + 1 + k, j)

    rec(0, len(pts) - 1)
    return keep


@pytest.mark.parametrize("impl", ["np", "nb"])
def test_douglas_peucker_matches_reference(rng, impl):
    fn = getattr(kernels, f"{impl}_douglas_peucker")
    for _ in range(300):
        pts = np.cumsum(rng.normal(0, 1, size=(int(rng.integers(2, 15)), 2)), axis=0)
        tol = float(rng.uniform(0, 1.5))
        np.testing.assert_array_equal(np.asarray(fn(pts, tol), bool), reference_dp(pts, tol))


def test_douglas_peucker_zero_tolerance_keeps_all():
    pts = np.array([(0, 0), (1, 0), (2, 0), (3, 1)], float)
    assert np.asarray(kernels.douglas_peucker(pts, 0.0)).all()


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("off", "numpy"), ("1", None)])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, GENAGENT_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from genagent import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected is None:
        expected = "numba" if HAS_NUMBA else "numpy"
    assert out == expected


def test_benchmark_script_runs():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
                          "--repeat", "1", "--no-session"], capture_output=True, text=True, check=True).stdout
    assert "parts_distance" in out and "douglas_peucker" in out
