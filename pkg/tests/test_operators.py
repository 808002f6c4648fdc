import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genagent.genome import Chromosome, Gene, zero_chromosome
from genagent.geometry import ELIMINATED, MapObject, Polygon, Polyline, ScaleSpec, interior_angles
from genagent.operators import (
    KIND_OPERATORS,
    Bounds,
    OperatorKind,
    apply_plan,
    displace,
    enlarge,
    simplify_building,
    simplify_line,
    square_building,
)

from conftest import square

BOUNDS = Bounds.for_scale(ScaleSpec(1000, 1500))


def plan(obj, flags, params):
    return Chromosome(Gene(obj.id, obj.kind, np.array(flags, np.uint8), np.array(params, float)))


class TestSimplifyLine:
    def test_small_bump_removed(self):
        out = simplify_line(Polyline([(0, 0), (5, 0.1), (10, 0)]), 0.5)
        np.testing.assert_array_equal(out.coords, [(0, 0), (10, 0)])

    def test_large_bump_kept(self):
        line = Polyline([(0, 0), (5, 3), (10, 0)])
        assert simplify_line(line, 0.5) == line

    def test_zero_tolerance_identity(self):
        line = Polyline([(0, 0), (1, 0.001), (2, 0), (3, 5)])
        assert simplify_line(line, 0.0) is line

    def test_endpoints_kept(self, rng):
        for _ in range(100):
            line = Polyline(np.cumsum(rng.normal(0, 1, (10, 2)), axis=0))
            out = simplify_line(line, float(rng.uniform(0, 3)))
            np.testing.assert_array_equal(out.coords[[0, -1]], line.coords[[0, -1]])

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ValueError):
            simplify_line(Polyline([(0, 0), (1, 0)]), -1)


class TestSimplifyBuilding:
    def test_notch_removed(self):
        notched = Polygon([(0, 0), (5, 0), (5, 2), (2.5, 2.05), (0, 2)])
        out = simplify_building(notched, 0.1)
        assert len(out) == 4
        assert set(map(tuple, out.ring.tolist())) == {(0, 0), (5, 0), (5, 2), (0, 2)}

    @pytest.mark.parametrize("tol", [0.0, 0.1, 1.0, 100.0])
    def test_square_unchanged(self, tol):
        sq = square(side=3)
        assert simplify_building(sq, tol) == sq

    def test_l_shape_zero_tolerance(self):
        l_shape = Polygon([(0, 0), (4, 0), (4, 1), (1, 1), (1, 3), (0, 3)])
        assert simplify_building(l_shape, 0.0) is l_shape

    def test_never_below_four_vertices(self, rng):
        for _ in range(100):
            k = int(rng.integers(5, 12))
            ang = np.sort(rng.uniform(0, 2 * math.pi, k))
            ring = np.column_stack((np.cos(ang), np.sin(ang))) * rng.uniform(2, 3, (k, 1))
            out = simplify_building(Polygon(ring), float(rng.uniform(0, 2)))
            assert len(out) >= 4


class TestDisplace:
    def test_unit_square_to_3_4(self):
        out = displace(square(), 3, 4)
        np.testing.assert_array_equal(out.bounds(), (3, 4, 4, 5))

    def test_zero_is_identity(self):
        sq = square()
        assert displace(sq, 0, 0) is sq

    def test_round_trip_bitwise(self):
        line = Polyline([(0.5, 0.25), (3.75, 1.0), (8.0, -2.5)])
        back = displace(displace(line, 3.0, -4.5), -3.0, 4.5)
        np.testing.assert_array_equal(back.coords, line.coords)


class TestEnlarge:
    def test_unit_square_factor_2(self):
        out = enlarge(square(), 2.0)
        assert out.area == pytest.approx(4.0, rel=1e-12)
        assert out.centroid == pytest.approx(square().centroid, abs=1e-12)

    def test_factor_one_identity(self):
        sq = square()
        assert enlarge(sq, 1.0) is sq

    def test_100_to_144(self):
        b = square(side=10.0)
        assert enlarge(b, 1.2).area == pytest.approx(144.0, rel=1e-9)

    def test_shrinking_rejected(self):
        with pytest.raises(ValueError):
            enlarge(square(), 0.5)


class TestSquare:
    def test_88_degree_parallelogram(self):
        skew = math.tan(math.radians(2.0)) * 4.0
        para = Polygon([(0, 0), (10, 0), (10 + skew, 4), (skew, 4)])
        np.testing.assert_allclose(np.sort(interior_angles(para)), [88, 88, 92, 92], atol=1e-9)
        out = square_building(para, 5.0)
        np.testing.assert_allclose(interior_angles(out), 90.0, atol=1e-6)

    def test_exact_rectangle_unchanged(self):
        r = Polygon([(0, 0), (7, 0), (7, 3), (0, 3)])
        assert square_building(r, 10.0) is r

    def test_rhombus_60_unchanged(self):
        h = math.sqrt(3) / 2 * 4
        rh = Polygon([(0, 0), (4, 0), (6, h), (2, h)])
        assert square_building(rh, 5.0) is rh

    def test_l_shape_reflex_corner_snapped(self):
        l_shape = Polygon([(0, 0), (4, 0.05), (4, 1), (1, 1), (1, 3), (0, 3)])
        out = square_building(l_shape, 5.0)
        np.testing.assert_allclose(np.mod(interior_angles(out), 180.0), 90.0, atol=1e-6)


class TestApplyPlan:
    def test_zero_plan_identity(self):
        obj = MapObject("b", "building", square())
        out = apply_plan(obj, zero_chromosome("b", "building"), BOUNDS)
        assert out.geometry is obj.geometry
        assert out.applied == ()

    def test_eliminate_short_circuits(self):
        obj = MapObject("b", "building", square())
        out = apply_plan(obj, plan(obj, [1, 1, 1, 1, 1], [0.3, 3, 4, 2.0]), BOUNDS)
        assert out.geometry is ELIMINATED
        assert out.applied == ("eliminate",)

    def test_displace_only(self):
        obj = MapObject("b", "building", square())
        out = apply_plan(obj, plan(obj, [0, 1, 0, 0, 0], [0, 3, 4, 1]), BOUNDS)
        np.testing.assert_array_equal(out.geometry.bounds(), (3, 4, 4, 5))
        assert out.shaped is obj.geometry
        assert (out.dx, out.dy) == (3.0, 4.0)

    def test_shape_before_placement(self):
        obj = MapObject("b", "building", square(side=10))
        out = apply_plan(obj, plan(obj, [0, 1, 1, 0, 0], [0, 1, 0, 1.2]), BOUNDS)
        assert out.shaped.area == pytest.approx(144.0)
        assert out.geometry.centroid == pytest.approx((6.0, 5.0))
        assert out.applied == ("enlarge", "displace")

    def test_road_flag_layout(self):
        assert KIND_OPERATORS["road"] == (OperatorKind.SIMPLIFY, OperatorKind.DISPLACE, OperatorKind.ELIMINATE)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-200, 200), st.integers(-200, 200)), min_size=2, max_size=12, unique=True),
       st.floats(0, 50))
def test_simplify_line_idempotent(pts, tol):
    line = Polyline(np.array(pts, float) / 8.0)
    once = simplify_line(line, tol)
    assert simplify_line(once, tol) == once
