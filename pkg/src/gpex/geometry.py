"""Exact rational planar geometry.

Coordinates are ``gmpy2.mpq`` rationals.  Predicates never round.  Lengths,
which are square roots of rationals, come back as certified
:class:`Enclosure` intervals.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import gmpy2
from gmpy2 import mpq, mpz

# relative width of length enclosures: 2**-LENGTH_BITS
LENGTH_BITS = 40

ZERO = mpq(0)
ONE = mpq(1)


def q(value) -> mpq:
    """Coerce ints, ``"p/q"`` strings, Fractions and mpq to an exact rational."""
    if isinstance(value, type(ZERO)):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact coordinates")
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return mpq(value.strip())
    return mpq(value)


def fmt_q(value: mpq) -> str:
    """Canonical ``p/q`` (or ``p``) text of a rational."""
    value = q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Point(NamedTuple):
    x: mpq
    y: mpq


def point(x, y) -> Point:
    return Point(q(x), q(y))


def cross(o: Point, a: Point, b: Point) -> mpq:
    """Twice the signed area of triangle (o, a, b); > 0 for a left turn."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


# --------------------------------------------------------------------------
# certified enclosures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    """Closed interval [lo, hi] with exact rational endpoints."""

    lo: mpq
    hi: mpq

    @classmethod
    def exact(cls, value) -> "Enclosure":
        v = q(value)
        return cls(v, v)

    def __add__(self, other) -> "Enclosure":
        if isinstance(other, Enclosure):
            return Enclosure(self.lo + other.lo, self.hi + other.hi)
        v = q(other)
        return Enclosure(self.lo + v, self.hi + v)

    __radd__ = __add__

    def __sub__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def scale(self, k) -> "Enclosure":
        k = q(k)
        if k < 0:
            return Enclosure(self.hi * k, self.lo * k)
        return Enclosure(self.lo * k, self.hi * k)

    @property
    def width(self) -> mpq:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def mid(self) -> float:
        return float((self.lo + self.hi) / 2)

    def contains(self, value) -> bool:
        if isinstance(value, float):
            return float(self.lo) <= value <= float(self.hi)
        v = q(value)
        return self.lo <= v <= self.hi

    def overlaps(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def max(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(max(self.lo, other.lo), max(self.hi, other.hi))

    def __float__(self) -> float:
        return self.mid()


def sqrt_enclosure(r, bits: int = LENGTH_BITS) -> Enclosure:
    """Enclose sqrt(r) for rational r >= 0 with relative width below 2**-bits."""
    r = q(r)
    if r < 0:
        raise ValueError("negative radicand")
    if r == 0:
        return Enclosure(ZERO, ZERO)
    num, den = mpz(r.numerator), mpz(r.denominator)
    if gmpy2.is_square(num) and gmpy2.is_square(den):
        v = mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
        return Enclosure(v, v)
    # sqrt(num/den) = sqrt(num*den)/den
    prod = num * den
    shift = max(0, bits + 2 - prod.bit_length() // 2)
    s = gmpy2.isqrt(prod << (2 * shift))
    scale = den << shift
    return Enclosure(mpq(s, scale), mpq(s + 1, scale))


# --------------------------------------------------------------------------
# affine maps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap2:
    """x -> linear @ x + translation, stored as (a, b, c, d) and (e, f)."""

    a: mpq
    b: mpq
    c: mpq
    d: mpq
    e: mpq = ZERO
    f: mpq = ZERO

    @classmethod
    def of(cls, linear, translation=(0, 0)) -> "AffineMap2":
        (a, b), (c, d) = linear
        e, f = translation
        return cls(q(a), q(b), q(c), q(d), q(e), q(f))

    @classmethod
    def identity(cls) -> "AffineMap2":
        return cls(ONE, ZERO, ZERO, ONE, ZERO, ZERO)

    @classmethod
    def translation_by(cls, tx, ty) -> "AffineMap2":
        return cls(ONE, ZERO, ZERO, ONE, q(tx), q(ty))

    @property
    def linear(self) -> tuple[tuple[mpq, mpq], tuple[mpq, mpq]]:
        return ((self.a, self.b), (self.c, self.d))

    @property
    def translation(self) -> tuple[mpq, mpq]:
        return (self.e, self.f)

    @property
    def det(self) -> mpq:
        return self.a * self.d - self.b * self.c

    def is_orthogonal(self) -> bool:
        return (
            self.a * self.a + self.c * self.c == 1
            and self.b * self.b + self.d * self.d == 1
            and self.a * self.b + self.c * self.d == 0
        )

    def __call__(self, p: Point) -> Point:
        return Point(
            self.a * p.x + self.b * p.y + self.e,
            self.c * p.x + self.d * p.y + self.f,
        )

    def compose(self, inner: "AffineMap2") -> "AffineMap2":
        """self after inner."""
        return AffineMap2(
            self.a * inner.a + self.b * inner.c,
            self.a * inner.b + self.b * inner.d,
            self.c * inner.a + self.d * inner.c,
            self.c * inner.b + self.d * inner.d,
            self.a * inner.e + self.b * inner.f + self.e,
            self.c * inner.e + self.d * inner.f + self.f,
        )

    def inverse(self) -> "AffineMap2":
        det = self.det
        if det == 0:
            raise ValueError("affine map is not invertible")
        a, b, c, d = self.d / det, -self.b / det, -self.c / det, self.a / det
        return AffineMap2(a, b, c, d, -(a * self.e + b * self.f), -(c * self.e + d * self.f))


def reflection_across(p: Point, r: Point) -> AffineMap2:
    """Reflection in the line through p and r (rational for rational input)."""
    dx, dy = r.x - p.x, r.y - p.y
    n2 = dx * dx + dy * dy
    if n2 == 0:
        raise ValueError("degenerate line")
    a = (dx * dx - dy * dy) / n2
    b = 2 * dx * dy / n2
    lin = AffineMap2(a, b, b, -a)
    img = lin(p)
    return AffineMap2(a, b, b, -a, p.x - img.x, p.y - img.y)


# --------------------------------------------------------------------------
# convex polygons
# --------------------------------------------------------------------------


def _hull(points: Iterable[Point]) -> list[Point]:
    # monotone chain, strict turns only; CCW from the lexicographic minimum
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, CCW, starting at its lexicographically smallest vertex.

    Build instances with :func:`polygon` or :meth:`from_hull`; the raw
    constructor trusts its input.
    """

    vertices: tuple[Point, ...]

    @classmethod
    def from_hull(cls, points: Iterable[Point]) -> Optional["ConvexPolygon"]:
        hull = _hull(points)
        if len(hull) < 3:
            return None
        return cls(tuple(hull))

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def bbox(self) -> tuple[mpq, mpq, mpq, mpq]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, p: Point, strict: bool = False) -> bool:
        for a, b in self.edges():
            c = cross(a, b, p)
            if c < 0 or (strict and c == 0):
                return False
        return True

    def locate(self, p: Point) -> str:
        """'interior', 'boundary' or 'outside'."""
        on_edge = False
        for a, b in self.edges():
            c = cross(a, b, p)
            if c < 0:
                return "outside"
            if c == 0:
                on_edge = True
        return "boundary" if on_edge else "interior"


def polygon(points: Sequence) -> ConvexPolygon:
    """Validated convex polygon from a vertex cycle (either orientation).

    Collinear and repeated vertices are dropped.  Raises ``ValueError`` for
    non-convex or degenerate input.
    """
    pts = [p if isinstance(p, Point) else point(*p) for p in points]
    dedup = [p for i, p in enumerate(pts) if p != pts[i - 1]] if len(pts) > 1 else pts
    n = len(dedup)
    if n < 3:
        raise ValueError("polygon needs at least three distinct vertices")
    turns = [cross(dedup[i - 1], dedup[i], dedup[(i + 1) % n]) for i in range(n)]
    if any(t > 0 for t in turns) and any(t < 0 for t in turns):
        raise ValueError("vertex cycle is not convex")
    poly = ConvexPolygon.from_hull(dedup)
    if poly is None:
        raise ValueError("polygon has zero area")
    # a self-overlapping star cycle passes the turn test; catch it by area
    signed = sum(cross(ZERO_POINT, dedup[i], dedup[(i + 1) % n]) for i in range(n))
    if abs(signed) != 2 * area(poly):
        raise ValueError("vertex cycle is not a simple convex polygon")
    return poly


ZERO_POINT = Point(ZERO, ZERO)


def rectangle(x0, y0, x1, y1) -> ConvexPolygon:
    return polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def clip_halfplane(poly: ConvexPolygon, normal, offset) -> Optional[ConvexPolygon]:
    """The part of ``poly`` with normal . p <= offset, or None if it has no area."""
    nx, ny = q(normal[0]), q(normal[1])
    offset = q(offset)
    verts = poly.vertices
    vals = [nx * p.x + ny * p.y - offset for p in verts]
    if all(v <= 0 for v in vals):
        return poly
    if all(v >= 0 for v in vals):
        return None
    out: list[Point] = []
    n = len(verts)
    for i in range(n):
        p, vp = verts[i], vals[i]
        r, vr = verts[(i + 1) % n], vals[(i + 1) % n]
        if vp <= 0:
            out.append(p)
        if (vp < 0 < vr) or (vr < 0 < vp):
            t = vp / (vp - vr)
            out.append(Point(p.x + t * (r.x - p.x), p.y + t * (r.y - p.y)))
    return ConvexPolygon.from_hull(out)


def edge_halfplane(a: Point, b: Point) -> tuple[tuple[mpq, mpq], mpq]:
    """Halfplane (normal, offset) of points left of the directed edge a->b."""
    nx, ny = b.y - a.y, a.x - b.x
    return (nx, ny), nx * a.x + ny * a.y


def intersect_convex(p: ConvexPolygon, other: ConvexPolygon) -> Optional[ConvexPolygon]:
    """Exact intersection; None when the interiors are disjoint."""
    px0, py0, px1, py1 = p.bbox()
    qx0, qy0, qx1, qy1 = other.bbox()
    if px1 <= qx0 or qx1 <= px0 or py1 <= qy0 or qy1 <= py0:
        return None
    # clip the one with fewer vertices by the other's edges
    if len(other) > len(p):
        p, other = other, p
    result: Optional[ConvexPolygon] = other
    for a, b in p.edges():
        normal, offset = edge_halfplane(a, b)
        result = clip_halfplane(result, normal, offset)
        if result is None:
            return None
    return result


def apply_affine(m: AffineMap2, poly: ConvexPolygon) -> ConvexPolygon:
    if m.det == 0:
        raise ValueError("affine map is not invertible")
    image = ConvexPolygon.from_hull(m(p) for p in poly.vertices)
    assert image is not None
    return image


def area(poly: ConvexPolygon) -> mpq:
    v = poly.vertices
    n = len(v)
    s = sum(v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y for i in range(n))
    return s / 2


def dist2(a: Point, b: Point) -> mpq:
    dx, dy = a.x - b.x, a.y - b.y
    return dx * dx + dy * dy


def segment_length(a: Point, b: Point, bits: int = LENGTH_BITS) -> Enclosure:
    dx, dy = a.x - b.x, a.y - b.y
    if dx == 0:
        return Enclosure.exact(abs(dy))
    if dy == 0:
        return Enclosure.exact(abs(dx))
    return sqrt_enclosure(dx * dx + dy * dy, bits)


def perimeter(poly: ConvexPolygon, bits: int = LENGTH_BITS) -> Enclosure:
    total = Enclosure.exact(0)
    for a, b in poly.edges():
        total = total + segment_length(a, b, bits)
    return total


def diameter(poly: ConvexPolygon, bits: int = LENGTH_BITS) -> Enclosure:
    v = poly.vertices
    best = max(dist2(v[i], v[j]) for i in range(len(v)) for j in range(i + 1, len(v)))
    return sqrt_enclosure(best, bits)


def centroid(poly: ConvexPolygon) -> Point:
    """Area centroid; lies in the interior."""
    v = poly.vertices
    n = len(v)
    cx = cy = ZERO
    a2 = ZERO
    for i in range(n):
        p, r = v[i], v[(i + 1) % n]
        w = p.x * r.y - r.x * p.y
        a2 += w
        cx += (p.x + r.x) * w
        cy += (p.y + r.y) * w
    return Point(cx / (3 * a2), cy / (3 * a2))


# --------------------------------------------------------------------------
# segments and overlay
# --------------------------------------------------------------------------


class Segment(NamedTuple):
    a: Point
    b: Point


def segment(a, b) -> Segment:
    a = a if isinstance(a, Point) else point(*a)
    b = b if isinstance(b, Point) else point(*b)
    if a == b:
        raise ValueError("segment endpoints coincide")
    return Segment(a, b)


def line_key(a: Point, b: Point) -> tuple[mpq, mpq, mpq]:
    """Normalized (nx, ny, c) of the line through a and b: nx*x + ny*y = c."""
    nx, ny = b.y - a.y, a.x - b.x
    s = nx if nx != 0 else ny
    nx, ny = nx / s, ny / s
    return nx, ny, nx * a.x + ny * a.y


def line_param(key: tuple[mpq, mpq, mpq], p: Point) -> mpq:
    # monotone coordinate along the line: y for vertical lines, x otherwise
    return p.y if key[1] == 0 else p.x


def _point_on(key, t: mpq) -> Point:
    nx, ny, c = key
    if ny == 0:
        return Point(c / nx, t)
    return Point(t, (c - nx * t) / ny)


def _merge_collinear(segs: Iterable[Segment]) -> list[Segment]:
    by_line: dict[tuple, list[tuple[mpq, mpq]]] = {}
    for s in segs:
        key = line_key(s.a, s.b)
        t0, t1 = line_param(key, s.a), line_param(key, s.b)
        if t0 > t1:
            t0, t1 = t1, t0
        by_line.setdefault(key, []).append((t0, t1))
    merged: list[Segment] = []
    for key, ivs in by_line.items():
        ivs.sort()
        cur0, cur1 = ivs[0]
        for t0, t1 in ivs[1:]:
            if t0 <= cur1:
                if t1 > cur1:
                    cur1 = t1
            else:
                merged.append(Segment(_point_on(key, cur0), _point_on(key, cur1)))
                cur0, cur1 = t0, t1
        merged.append(Segment(_point_on(key, cur0), _point_on(key, cur1)))
    return merged


def _proper_crossing(s: Segment, t: Segment) -> Optional[Point]:
    d1 = cross(s.a, s.b, t.a)
    d2 = cross(s.a, s.b, t.b)
    d3 = cross(t.a, t.b, s.a)
    d4 = cross(t.a, t.b, s.b)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        u = d3 / (d3 - d4)
        return Point(s.a.x + u * (s.b.x - s.a.x), s.a.y + u * (s.b.y - s.a.y))
    return None


def overlay_segments(segs: Iterable[Segment]) -> list[Segment]:
    """Pairwise interior-disjoint segments covering exactly the union of ``segs``.

    Collinear overlaps are merged and proper crossings are split.  Output
    segments run from the lexicographically smaller endpoint and are sorted.
    """
    merged = _merge_collinear(segs)
    merged = [Segment(*sorted((s.a, s.b))) for s in merged]
    merged.sort(key=lambda s: (min(s.a.x, s.b.x), s))
    cuts: dict[int, list[Point]] = {}
    # sort-and-sweep on x extents
    for i, s in enumerate(merged):
        sx1 = max(s.a.x, s.b.x)
        sy0, sy1 = min(s.a.y, s.b.y), max(s.a.y, s.b.y)
        for j in range(i + 1, len(merged)):
            t = merged[j]
            if min(t.a.x, t.b.x) > sx1:
                break
            if max(t.a.y, t.b.y) < sy0 or min(t.a.y, t.b.y) > sy1:
                continue
            x = _proper_crossing(s, t)
            if x is not None:
                cuts.setdefault(i, []).append(x)
                cuts.setdefault(j, []).append(x)
    out: list[Segment] = []
    for i, s in enumerate(merged):
        pts = sorted({s.a, s.b, *cuts.get(i, ())})
        out.extend(Segment(pts[k], pts[k + 1]) for k in range(len(pts) - 1))
    out.sort()
    return out


def total_length(segs: Iterable[Segment], bits: int = LENGTH_BITS) -> Enclosure:
    total = Enclosure.exact(0)
    for s in segs:
        total = total + segment_length(s.a, s.b, bits)
    return total


def decimal_text(value, digits: int = 12, up: bool = False) -> str:
    """``value`` rounded to ``digits`` significant digits, toward +inf if ``up`` else -inf."""
    import decimal

    value = q(value)
    rounding = decimal.ROUND_CEILING if up else decimal.ROUND_FLOOR
    ctx = decimal.Context(prec=digits, rounding=rounding)
    d = ctx.divide(decimal.Decimal(int(value.numerator)), decimal.Decimal(int(value.denominator)))
    return format(d, "f")
