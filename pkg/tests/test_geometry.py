import random
from fractions import Fraction

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import points, rationals
from gpex.geometry import (
    AffineMap2,
    ConvexPolygon,
    Enclosure,
    Point,
    apply_affine,
    area,
    clip_halfplane,
    cross,
    decimal_text,
    intersect_convex,
    overlay_segments,
    perimeter,
    point,
    polygon,
    q,
    rectangle,
    reflection_across,
    segment,
    segment_length,
    sqrt_enclosure,
    total_length,
)


def shoelace(pts) -> Fraction:
    # oracle: plain Fractions, no gmpy2
    fr = [(Fraction(int(p.x.numerator), int(p.x.denominator)), Fraction(int(p.y.numerator), int(p.y.denominator))) for p in pts]
    s = sum(fr[i][0] * fr[(i + 1) % len(fr)][1] - fr[(i + 1) % len(fr)][0] * fr[i][1] for i in range(len(fr)))
    return abs(s) / 2


def as_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


hulls = st.lists(points(), min_size=3, max_size=9).map(ConvexPolygon.from_hull).filter(lambda p: p is not None)
halfplanes = st.tuples(st.tuples(rationals(-3, 3), rationals(-3, 3)), rationals(-6, 6)).filter(
    lambda h: h[0] != (0, 0)
)


# --------------------------------------------------------------------------
# rationals and enclosures
# --------------------------------------------------------------------------


def test_q_rejects_floats():
    with pytest.raises(TypeError):
        q(0.5)
    assert q("3/6") == mpq(1, 2)
    assert q(Fraction(2, 4)) == mpq(1, 2)


@given(rationals(0, 50, 97))
def test_sqrt_enclosure_contains_true_root(r):
    enc = sqrt_enclosure(r)
    with mpmath.workprec(200):
        root = mpmath.sqrt(mpmath.mpf(int(r.numerator)) / int(r.denominator))
        assert mpmath.mpf(int(enc.lo.numerator)) / int(enc.lo.denominator) <= root
        assert root <= mpmath.mpf(int(enc.hi.numerator)) / int(enc.hi.denominator)
    if r > 0:
        assert enc.width <= enc.lo * mpq(1, 2**40)


def test_sqrt_enclosure_exact_on_squares():
    assert sqrt_enclosure(mpq(9, 4)) == Enclosure(mpq(3, 2), mpq(3, 2))
    assert sqrt_enclosure(0).is_exact


def test_enclosure_arithmetic():
    a = Enclosure(mpq(1), mpq(2))
    b = Enclosure(mpq(3), mpq(5))
    assert a + b == Enclosure(mpq(4), mpq(7))
    assert b - a == Enclosure(mpq(1), mpq(4))
    assert a.scale(-2) == Enclosure(mpq(-4), mpq(-2))
    assert a.overlaps(Enclosure(mpq(2), mpq(9)))
    assert not a.overlaps(b)


def test_decimal_text_directed_rounding():
    assert decimal_text(mpq(1, 3), 5) == "0.33333"
    assert decimal_text(mpq(1, 3), 5, up=True) == "0.33334"
    assert decimal_text(mpq(-1, 3), 5) == "-0.33334"
    assert decimal_text(mpq(5), 5) == "5"


# --------------------------------------------------------------------------
# affine maps
# --------------------------------------------------------------------------


affine_maps = st.builds(
    lambda a, b, c, d, e, f: AffineMap2(a, b, c, d, e, f),
    *[rationals(-3, 3, 8)] * 6,
).filter(lambda m: m.det != 0)


@given(affine_maps, affine_maps, points())
def test_compose_applies_inner_first(m1, m2, p):
    assert m1.compose(m2)(p) == m1(m2(p))


@given(affine_maps, points())
def test_inverse_roundtrip(m, p):
    assert m.inverse()(m(p)) == p
    assert m.compose(m.inverse()) == AffineMap2.identity()


@given(points(), points())
def test_reflection_is_rational_involution(a, b):
    assume(a != b)
    r = reflection_across(a, b)
    assert r.is_orthogonal
    assert r.det == -1
    assert r(a) == a and r(b) == b
    assert r.compose(r) == AffineMap2.identity()


# --------------------------------------------------------------------------
# polygons and clipping
# --------------------------------------------------------------------------


@given(hulls)
def test_canonical_form(poly):
    v = poly.vertices
    assert v[0] == min(v)
    k = len(v)
    assert all(cross(v[i - 1], v[i], v[(i + 1) % k]) > 0 for i in range(k))
    assert area(poly) == shoelace(v)


def test_polygon_rejects_nonconvex():
    with pytest.raises(ValueError):
        polygon([(0, 0), (2, 0), (1, 1), (2, 2), (0, 2)])


@given(hulls, halfplanes)
def test_clip_idempotent(poly, h):
    once = clip_halfplane(poly, *h)
    if once is None:
        return
    assert clip_halfplane(once, *h) == once


@given(hulls, halfplanes)
def test_clip_area_additive(poly, h):
    (nx, ny), c = h
    inside = clip_halfplane(poly, (nx, ny), c)
    outside = clip_halfplane(poly, (-nx, -ny), -c)
    total = sum((area(p) for p in (inside, outside) if p is not None), mpq(0))
    assert total == area(poly)


@given(hulls, hulls)
def test_intersection_symmetric_and_contained(a, b):
    ab = intersect_convex(a, b)
    ba = intersect_convex(b, a)
    assert ab == ba
    if ab is not None:
        assert all(a.contains(p) and b.contains(p) for p in ab.vertices)
        assert area(ab) <= min(area(a), area(b))


@given(hulls, affine_maps)
def test_affine_image_scales_area(poly, m):
    img = apply_affine(m, poly)
    assert area(img) == area(poly) * abs(m.det)


def test_locate():
    sq = rectangle(0, 0, 1, 1)
    assert sq.locate(point("1/2", "1/2")) == "interior"
    assert sq.locate(point(1, "1/3")) == "boundary"
    assert sq.locate(point(2, 0)) == "outside"


# --------------------------------------------------------------------------
# overlay
# --------------------------------------------------------------------------


def _on_segment(p: Point, s) -> bool:
    if cross(s.a, s.b, p) != 0:
        return False
    return min(s.a.x, s.b.x) <= p.x <= max(s.a.x, s.b.x) and min(s.a.y, s.b.y) <= p.y <= max(s.a.y, s.b.y)


segments = st.tuples(points(-2, 2), points(-2, 2)).filter(lambda ab: ab[0] != ab[1]).map(lambda ab: segment(*ab))


@given(st.lists(segments, min_size=1, max_size=8))
def test_overlay_pieces_disjoint_and_covering(segs):
    out = overlay_segments(segs)
    # every piece lies in the union of the inputs
    for s in out:
        stops = sorted({s.a, s.b, *(p for t in segs for p in (t.a, t.b) if _on_segment(p, s))})
        for a, b in zip(stops, stops[1:]):
            mid = Point((a.x + b.x) / 2, (a.y + b.y) / 2)
            assert any(_on_segment(mid, t) for t in segs)
    # pieces meet only at endpoints
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            s, t = out[i], out[j]
            if cross(s.a, s.b, t.a) == 0 and cross(s.a, s.b, t.b) == 0:
                key = (lambda p: p.x) if s.a.x != s.b.x else (lambda p: p.y)
                lo = max(min(key(s.a), key(s.b)), min(key(t.a), key(t.b)))
                hi = min(max(key(s.a), key(s.b)), max(key(t.a), key(t.b)))
                assert lo >= hi
            else:
                d1, d2 = cross(s.a, s.b, t.a), cross(s.a, s.b, t.b)
                d3, d4 = cross(t.a, t.b, s.a), cross(t.a, t.b, s.b)
                assert not (d1 * d2 < 0 and d3 * d4 < 0)
    # every input endpoint is covered
    for s in segs:
        assert any(_on_segment(s.a, t) for t in out)


@given(st.lists(segments, min_size=1, max_size=8))
def test_overlay_conserves_length_of_disjoint_input(segs):
    # drop collinear overlaps, then splitting at crossings must keep total length
    keep = []
    for s in segs:
        if all(not (cross(s.a, s.b, t.a) == 0 and cross(s.a, s.b, t.b) == 0) for t in keep):
            keep.append(s)
    before = total_length(keep)
    after = total_length(overlay_segments(keep))
    assert before.overlaps(after)


def test_overlay_merges_collinear_overlap():
    out = overlay_segments([segment((0, 0), (2, 0)), segment((1, 0), (3, 0))])
    assert out == [segment((0, 0), (3, 0))]


def test_overlay_splits_crossing():
    out = overlay_segments([segment((0, 0), (2, 2)), segment((0, 2), (2, 0))])
    assert len(out) == 4
    assert all(point(1, 1) in (s.a, s.b) for s in out)


# --------------------------------------------------------------------------
# partitions
# --------------------------------------------------------------------------


def random_partition(rng: random.Random, cuts: int) -> tuple[ConvexPolygon, list[ConvexPolygon]]:
    """A random convex X cut by random rational lines."""

    def r(lo, hi, den=12):
        return mpq(rng.randint(lo * den, hi * den), den)

    while True:
        x = ConvexPolygon.from_hull([Point(r(-3, 3), r(-3, 3)) for _ in range(rng.randint(3, 7))])
        if x is not None:
            break
    cells = [x]
    for _ in range(cuts):
        n = (r(-2, 2), r(-2, 2))
        if n == (0, 0):
            continue
        c = r(-2, 2)
        nxt = []
        for cell in cells:
            for piece in (clip_halfplane(cell, n, c), clip_halfplane(cell, (-n[0], -n[1]), -c)):
                if piece is not None:
                    nxt.append(piece)
        cells = nxt
    return x, cells


def perimeter_skeleton_identity(x: ConvexPolygon, cells: list[ConvexPolygon]) -> bool:
    """Sum of cell perimeters = perim(X) + 2 * (interior skeleton length), enclosure-certified."""
    edges = [segment(a, b) for c in cells for a, b in c.edges()]
    skel = total_length(overlay_segments(edges))
    lhs = Enclosure.exact(0)
    for c in cells:
        lhs = lhs + perimeter(c)
    px = perimeter(x)
    rhs = px + (skel - px).scale(2)
    return lhs.overlaps(rhs)


@pytest.mark.parametrize("seed", range(40))
def test_partition_identities(seed):
    rng = random.Random(seed)
    x, cells = random_partition(rng, rng.randint(1, 5))
    assert sum((area(c) for c in cells), mpq(0)) == area(x)
    assert perimeter_skeleton_identity(x, cells)


def test_segment_length_pythagorean():
    assert segment_length(point(0, 0), point(3, 4)) == Enclosure.exact(5)
    enc = segment_length(point(0, 0), point(1, 1))
    assert enc.lo * enc.lo <= 2 <= enc.hi * enc.hi
