import numpy as np
import pytest

from genagent.constraints import (
    DEFENSIVE,
    OFFENSIVE,
    ROLE,
    ConstraintEval,
    ConstraintKind,
    GridIndex,
    brute_force_conflicts,
    build_conflict_graph,
    defensive_violated,
    evaluate_internal,
    granularity,
    offensive_satisfied,
    road_band,
    squareness,
    symbol_distance,
    symbolize,
)
from genagent.geometry import ELIMINATED, MapObject, Polygon, Polyline
from genagent.scenes import random_scene

from conftest import square


def sat(evals, kind):
    return next(e.satisfaction for e in evals if e.kind is kind)


class TestInternal:
    def test_min_size_boundary(self, spec):
        b = MapObject("b", "building", square(side=0.6))
        assert sat(evaluate_internal(b, b.geometry, spec), ConstraintKind.MIN_SIZE) == pytest.approx(1.0)

    def test_min_size_quarter(self, spec):
        b = MapObject("b", "building", square(side=0.3))
        assert sat(evaluate_internal(b, b.geometry, spec), ConstraintKind.MIN_SIZE) == pytest.approx(0.25)

    def test_rectangle_is_square(self, spec):
        b = MapObject("b", "building", Polygon([(0, 0), (8, 0), (8, 5), (0, 5)]))
        assert sat(evaluate_internal(b, b.geometry, spec), ConstraintKind.SQUARENESS) == 1.0

    def test_squareness_counts_near_orthogonal_corners(self):
        # two 87 and two 93 degree corners: candidates, none within tolerance
        skew = np.tan(np.radians(3.0)) * 4
        assert squareness(Polygon([(0, 0), (10, 0), (10 + skew, 4), (skew, 4)])) == 0.0
        # 60 degree rhombus has no candidate corners
        h = np.sqrt(3) / 2 * 4
        assert squareness(Polygon([(0, 0), (4, 0), (6, h), (2, h)])) == 1.0

    def test_granularity_fraction(self):
        line = Polyline([(0, 0), (0.3, 0), (5, 0), (5, 5)])
        assert granularity(line, 0.6) == pytest.approx(2 / 3)

    def test_shape_preservation_is_defensive(self, spec):
        b = MapObject("b", "building", square(side=10))
        evals = evaluate_internal(b, square(side=5), spec)
        sp = next(e for e in evals if e.kind is ConstraintKind.SHAPE_PRESERVATION)
        assert sp.role == DEFENSIVE
        assert sp.satisfaction == pytest.approx(0.25)
        assert defensive_violated(evals)

    def test_eliminated_has_no_evaluations(self, spec):
        b = MapObject("b", "building", square())
        assert evaluate_internal(b, ELIMINATED, spec) == []

    def test_roles(self):
        assert ROLE[ConstraintKind.SHAPE_PRESERVATION] == DEFENSIVE
        assert all(ROLE[k] == OFFENSIVE for k in ConstraintKind if k is not ConstraintKind.SHAPE_PRESERVATION)

    def test_satisfactions_clamped(self, spec, rng):
        for obj in random_scene(rng, 60):
            for e in evaluate_internal(obj, obj.geometry, spec):
                assert 0.0 <= e.satisfaction <= 1.0


class TestDefensive:
    def test_low_shape_preservation(self):
        assert defensive_violated([ConstraintEval.of(ConstraintKind.SHAPE_PRESERVATION, 0.2)], 0.5)

    def test_all_satisfied(self):
        evals = [ConstraintEval.of(k, 1.0) for k in ConstraintKind]
        assert not defensive_violated(evals)
        assert offensive_satisfied(evals)

    def test_empty(self):
        assert not defensive_violated([])


class TestConflictGraph:
    def test_gap_below_threshold(self, spec):
        g = build_conflict_graph([("a", square()), ("b", square(x=1.1))], spec)
        assert g.edges == {("a", "b")}
        assert g.nc == 2

    def test_gap_above_threshold(self, spec):
        g = build_conflict_graph([("a", square()), ("b", square(x=2.0))], spec)
        assert g.edges == frozenset()
        assert g.nc == 0

    def test_gap_equal_to_threshold_is_legible(self, spec):
        g = build_conflict_graph([("a", square()), ("b", square(x=1.5))], spec)
        assert g.nc == 0

    def test_road_symbol_width(self, spec):
        road = Polyline([(0, 0), (10, 0)])
        near = square(4, 0.55)  # 0.25 from the band edge
        far = square(7, 0.65)  # 0.35 from the band edge
        g = build_conflict_graph([("r", road), ("n", near), ("f", far)], spec)
        assert g.edges == {("n", "r")}

    def test_road_band_is_flat_capped(self):
        band = road_band(Polyline([(0, 0), (10, 0)]), 0.3)
        np.testing.assert_allclose(band.coords, [(0, -0.3), (10, -0.3), (10, 0.3), (0, 0.3)])

    def test_eliminated_objects_ignored(self, spec):
        g = build_conflict_graph([("a", square()), ("b", ELIMINATED)], spec)
        assert g.nodes == ("a",)

    def test_three_clique(self, spec):
        g = build_conflict_graph([("a", square()), ("b", square(0.5)), ("c", square(0.25, 0.5))], spec)
        assert len(g.edges) == 3
        assert g.degree("a") == 2

    def test_random_squares_match_oracle(self, spec, rng):
        objs = [(f"s{i}", square(*rng.uniform(0, 15, 2), side=float(rng.uniform(0.5, 2)))) for i in range(50)]
        assert build_conflict_graph(objs, spec).edges == brute_force_conflicts(objs, spec).edges

    def test_nc_zero_when_all_separated(self, spec):
        objs = [(f"s{i}", square(3.0 * i, 0)) for i in range(20)]
        assert build_conflict_graph(objs, spec).nc == 0

    def test_symbol_distance_matches_band(self, spec):
        road = Polyline([(0, 0), (10, 0)])
        d = symbol_distance(symbolize(road, spec), symbolize(square(4, 2), spec))
        assert d == pytest.approx(1.7)


def test_grid_index_pairs_only_share_cells():
    index = GridIndex(cell=1.0, margin=0.0)
    for i, sq in enumerate([square(0.1, 0.1, 0.5), square(0.5, 0.5, 0.2), square(5, 5, 0.5)]):
        index.insert(i, symbolize(sq, None))
    assert index.candidate_pairs() == {(0, 1)}
