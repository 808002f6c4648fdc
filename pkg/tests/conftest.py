import numpy as np
import pytest

from genagent.geometry import MapObject, Polygon, Polyline, ScaleSpec
from genagent.scenes import rectangle


@pytest.fixture
def spec():
    return ScaleSpec(1000, 1500)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def square(x=0.0, y=0.0, side=1.0):
    return Polygon([(x, y), (x + side, y), (x + side, y + side), (x, y + side)])


def building(oid, geom):
    return MapObject(oid, "building", geom)


def road(oid, pts):
    return MapObject(oid, "road", Polyline(pts))


__all__ = ["square", "building", "road", "rectangle"]
