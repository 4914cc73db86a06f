import math

import pytest
from hypothesis import given, strategies as st

from collagelink.model import BoundingBox, CollageImage, Participant, PostRecord, Source, intersection_area, point_distance

coord = st.floats(min_value=0, max_value=500, allow_nan=False)
size = st.floats(min_value=0.5, max_value=200, allow_nan=False)
boxes = st.builds(BoundingBox, coord, coord, size, size)
points = st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))


def test_intersection_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert intersection_area(a, BoundingBox(20, 20, 5, 5)) == 0
    assert intersection_area(a, BoundingBox(0, 0, 10, 10)) == 100
    # overlap rectangle (5,5)-(10,10)
    assert intersection_area(a, BoundingBox(5, 5, 10, 10)) == 25


def test_touching_edges_do_not_intersect():
    assert intersection_area(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 5, 5)) == 0


@pytest.mark.parametrize("args", [(0, 0, 0, 5), (0, 0, 5, -1), (-1, 0, 5, 5), (0, -0.5, 5, 5)])
def test_invalid_box(args):
    with pytest.raises(ValueError):
        BoundingBox(*args)


@given(boxes, boxes)
def test_intersection_symmetric(a, b):
    assert intersection_area(a, b) == intersection_area(b, a)


@given(boxes)
def test_self_intersection_is_area(a):
    assert intersection_area(a, a) == pytest.approx(a.w * a.h, rel=1e-12)


@given(boxes, boxes)
def test_union_contains_both(a, b):
    u = a.union(b)
    for box in (a, b):
        assert u.x <= box.x and u.y <= box.y
        assert u.right >= box.right - 1e-9 and u.bottom >= box.bottom - 1e-9


def test_point_distance_examples():
    assert point_distance((0, 0), (0, 0)) == 0
    assert point_distance((0, 0), (3, 4)) == 5


@given(points, points)
def test_point_distance_matches_formula(p, q):
    expected = math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)
    assert point_distance(p, q) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@given(points, points, points)
def test_point_distance_metric_axioms(p, q, r):
    assert point_distance(p, q) == point_distance(q, p)
    assert point_distance(p, p) == 0
    assert (point_distance(p, q) == 0) == (p == q)
    assert point_distance(p, r) <= point_distance(p, q) + point_distance(q, r) + 1e-9


def test_participant_embedding_length():
    box = BoundingBox(0, 0, 1, 1)
    Participant("a", "m", box, embedding=tuple([0.0] * 128))
    with pytest.raises(ValueError):
        Participant("a", "m", box, embedding=(0.0, 1.0))


def test_collage_dimensions_positive():
    post = PostRecord("p", Source.TWITTER, "x.png")
    with pytest.raises(ValueError):
        CollageImage("p", post, 0, 10)
