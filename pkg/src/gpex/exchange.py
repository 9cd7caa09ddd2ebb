"""Generalized polygon exchanges on convex planar atoms.

A :class:`GpeSystem` is a convex polygon ``X``, a partition of ``X`` into
convex source atoms, and one invertible affine map per atom.  The target
atoms are always derived as the images of the source atoms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from .geometry import (
    AffineMap2,
    ConvexPolygon,
    Point,
    apply_affine,
    area,
    fmt_q,
    intersect_convex,
    perimeter,
    point,
    polygon,
    q,
    rectangle,
)

FLAVORS = ("affine", "euclidean")


class InvalidExchange(ValueError):
    def __init__(self, report: "ValidationReport"):
        super().__init__("; ".join(report.violations))
        self.report = report


@dataclass(frozen=True)
class PolygonPartition:
    space: ConvexPolygon
    atoms: tuple[ConvexPolygon, ...]

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class GpeSystem:
    source: PolygonPartition
    maps: tuple[AffineMap2, ...]
    flavor: str = "affine"
    name: str = "gpe"

    @property
    def space(self) -> ConvexPolygon:
        return self.source.space

    @property
    def atoms(self) -> tuple[ConvexPolygon, ...]:
        return self.source.atoms

    @property
    def target(self) -> PolygonPartition:
        return PolygonPartition(
            self.space, tuple(apply_affine(m, p) for m, p in zip(self.maps, self.atoms))
        )

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _check_partition(part: PolygonPartition, label: str, report: ValidationReport) -> None:
    space = part.space
    for i, atom in enumerate(part.atoms):
        if not all(space.contains(v) for v in atom.vertices):
            report.violations.append(f"{label} atom {i} outside space")
    for i in range(len(part.atoms)):
        for j in range(i + 1, len(part.atoms)):
            if intersect_convex(part.atoms[i], part.atoms[j]) is not None:
                report.violations.append(f"{label} interior overlap between atoms {i} and {j}")
    total = sum((area(a) for a in part.atoms), mpq(0))
    if total != area(space):
        report.violations.append(
            f"{label} area deficit: atoms cover {fmt_q(total)} of {fmt_q(area(space))}"
        )


def validate(g: GpeSystem) -> ValidationReport:
    """Every violated exchange invariant; an empty report means a valid GPE."""
    report = ValidationReport()
    if len(g.maps) != len(g.atoms):
        report.violations.append(
            f"map count {len(g.maps)} does not match atom count {len(g.atoms)}"
        )
        return report
    if g.flavor not in FLAVORS:
        report.violations.append(f"unknown flavor {g.flavor!r}")
    singular = [i for i, m in enumerate(g.maps) if m.det == 0]
    for i in singular:
        report.violations.append(f"piece map {i} is not invertible")
    if g.flavor == "euclidean":
        for i, m in enumerate(g.maps):
            if not m.is_orthogonal():
                report.violations.append(f"piece map {i} is not a Euclidean isometry")
    _check_partition(g.source, "source", report)
    if singular:
        return report
    target = g.target
    _check_partition(target, "target", report)
    if g.flavor == "euclidean":
        for i, (p, img) in enumerate(zip(g.atoms, target.atoms)):
            if perimeter(p) != perimeter(img):
                report.violations.append(f"piece {i} does not preserve perimeter")
    return report


def _checked(g: GpeSystem) -> GpeSystem:
    report = validate(g)
    if not report.ok:
        raise InvalidExchange(report)
    return g


# --------------------------------------------------------------------------
# orbits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitResult:
    points: tuple[Point, ...]
    itinerary: tuple[int, ...]
    singular_step: Optional[int] = None

    @property
    def regular(self) -> bool:
        return self.singular_step is None

    @property
    def status(self) -> str:
        return "Regular" if self.regular else f"SingularHit({self.singular_step})"

    @property
    def last(self) -> Point:
        return self.points[-1]


def locate(g: GpeSystem, x: Point) -> Optional[int]:
    """Index of the atom whose interior holds x, or None on the singular set."""
    for i, atom in enumerate(g.atoms):
        where = atom.locate(x)
        if where == "interior":
            return i
        if where == "boundary":
            return None
    return None


def evaluate(g: GpeSystem, x, n: int) -> OrbitResult:
    x = x if isinstance(x, Point) else point(*x)
    if not g.space.contains(x):
        raise ValueError("point lies outside the exchange domain")
    points = [x]
    itinerary: list[int] = []
    for step in range(n):
        i = locate(g, x)
        if i is None:
            return OrbitResult(tuple(points), tuple(itinerary), step)
        x = g.maps[i](x)
        points.append(x)
        itinerary.append(i)
    return OrbitResult(tuple(points), tuple(itinerary))


def inverse(g: GpeSystem) -> GpeSystem:
    target = g.target
    return GpeSystem(
        target, tuple(m.inverse() for m in g.maps), g.flavor, g.name + "^-1"
    )


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------


def _as_polygon(p) -> ConvexPolygon:
    return p if isinstance(p, ConvexPolygon) else polygon(p)


def make_affine_exchange(space, atoms, maps, name: str = "affine") -> GpeSystem:
    part = PolygonPartition(_as_polygon(space), tuple(_as_polygon(a) for a in atoms))
    maps = tuple(m if isinstance(m, AffineMap2) else AffineMap2.of(*m) for m in maps)
    return _checked(GpeSystem(part, maps, "affine", name))


def make_euclidean_exchange(space, atoms, isometries, name: str = "euclidean") -> GpeSystem:
    maps = tuple(m if isinstance(m, AffineMap2) else AffineMap2.of(*m) for m in isometries)
    for i, m in enumerate(maps):
        if not m.is_orthogonal():
            raise ValueError(f"piece map {i} has a non-orthogonal linear part")
    part = PolygonPartition(_as_polygon(space), tuple(_as_polygon(a) for a in atoms))
    return _checked(GpeSystem(part, maps, "euclidean", name))


def make_rectangle_exchange(rects: Sequence, translations: Sequence, name: str = "rectangles") -> GpeSystem:
    """Axis-parallel rectangles ``(x0, y0, x1, y1)`` of the unit square moved by ``translations``."""
    atoms = [rectangle(*r) for r in rects]
    maps = [AffineMap2.translation_by(*t) for t in translations]
    return make_euclidean_exchange(rectangle(0, 0, 1, 1), atoms, maps, name)


def make_baker() -> GpeSystem:
    half = mpq(1, 2)
    return make_affine_exchange(
        rectangle(0, 0, 1, 1),
        [rectangle(0, 0, half, 1), rectangle(half, 0, 1, 1)],
        [
            AffineMap2.of(((2, 0), (0, half)), (0, 0)),
            AffineMap2.of(((2, 0), (0, half)), (-1, half)),
        ],
        name="baker",
    )


def make_skew_baker(a="1/3") -> GpeSystem:
    """Baker map with strips of widths a and 1 - a, each stretched to full width."""
    a = q(a)
    if not 0 < a < 1:
        raise ValueError("a must lie strictly between 0 and 1")
    b = 1 - a
    return make_affine_exchange(
        rectangle(0, 0, 1, 1),
        [rectangle(0, 0, a, 1), rectangle(a, 0, 1, 1)],
        [
            AffineMap2.of(((1 / a, 0), (0, a)), (0, 0)),
            AffineMap2.of(((1 / b, 0), (0, b)), (-a / b, a)),
        ],
        name="skew-baker",
    )


def make_identity_exchange(k: int = 2) -> GpeSystem:
    cuts = [mpq(i, k) for i in range(k + 1)]
    rects = [(cuts[i], 0, cuts[i + 1], 1) for i in range(k)]
    return make_rectangle_exchange(rects, [(0, 0)] * k, name="identity")


def make_rotation_exchange(alpha="2/5") -> GpeSystem:
    """Two vertical strips of widths alpha and 1 - alpha swapped: circle rotation times identity."""
    alpha = q(alpha)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    return make_rectangle_exchange(
        [(0, 0, alpha, 1), (alpha, 0, 1, 1)],
        [(1 - alpha, 0), (-alpha, 0)],
        name="rotation",
    )


def make_skew_rotation(a="1/3", b="1/2") -> GpeSystem:
    """Three rectangles: x rotates by -a; on x >= a the height also rotates by -b."""
    a, b = q(a), q(b)
    return make_rectangle_exchange(
        [(0, 0, a, 1), (a, 0, 1, b), (a, b, 1, 1)],
        [(1 - a, 0), (-a, 1 - b), (-a, -b)],
        name="skew-rotation",
    )


def make_strip_rotation(alpha="3/13", w="1/40") -> GpeSystem:
    """The strip y < w rotated by alpha in x; the rest of the square stays put."""
    alpha, w = q(alpha), q(w)
    if not (0 < alpha < 1 and 0 < w < 1):
        raise ValueError("alpha and w must lie strictly between 0 and 1")
    return make_rectangle_exchange(
        [(0, w, 1, 1), (0, 0, 1 - alpha, w), (1 - alpha, 0, 1, w)],
        [(0, 0), (alpha, 0), (alpha - 1, 0)],
        name="strip-rotation",
    )


def make_quadrant_rotation() -> GpeSystem:
    """Each quadrant of the unit square turned a quarter about the center and moved on."""
    h = mpq(1, 2)
    quads = [rectangle(0, 0, h, h), rectangle(h, 0, 1, h), rectangle(h, h, 1, 1), rectangle(0, h, h, 1)]
    rot = ((0, -1), (1, 0))
    # rotate each quadrant about its own center, then shift it to the next quadrant CCW
    centers = [(mpq(1, 4), mpq(1, 4)), (mpq(3, 4), mpq(1, 4)), (mpq(3, 4), mpq(3, 4)), (mpq(1, 4), mpq(3, 4))]
    maps = []
    for i, (cx, cy) in enumerate(centers):
        nx, ny = centers[(i + 1) % 4]
        # x -> R(x - c) + c', with R(c) = (-cy, cx)
        maps.append(AffineMap2.of(rot, (nx + cy, ny - cx)))
    return make_euclidean_exchange(rectangle(0, 0, 1, 1), quads, maps, name="quadrant-rotation")


def make_shear_exchange() -> GpeSystem:
    """Unit square cut along its diagonal; each triangle is sheared onto the other."""
    lower = polygon([(0, 0), (1, 0), (1, 1)])
    upper = polygon([(0, 0), (1, 1), (0, 1)])
    to_upper = AffineMap2.of(((1, -1), (1, 0)), (0, 0))
    to_lower = AffineMap2.of(((0, 1), (-1, 1)), (0, 0))
    return make_affine_exchange(rectangle(0, 0, 1, 1), [lower, upper], [to_upper, to_lower], name="shear")


BUILTINS = {
    "baker": (make_baker, "Baker map on [0,1]^2: two strips stretched by 2 and squeezed by 1/2."),
    "skew-baker": (make_skew_baker, "Baker map with strips of widths a, 1-a (affine, parameter a)."),
    "identity-exchange": (make_identity_exchange, "Two vertical strips left in place."),
    "rotation": (make_rotation_exchange, "Two strips of widths alpha, 1-alpha swapped (parameter alpha)."),
    "skew-rotation": (make_skew_rotation, "Three-rectangle Euclidean exchange: x rotates by -a, y by -b on x >= a."),
    "strip-rotation": (make_strip_rotation, "Bottom strip of height w rotated by alpha, the rest fixed."),
    "quadrant-rotation": (make_quadrant_rotation, "Quadrants turned a quarter and cycled counterclockwise."),
    "shear": (make_shear_exchange, "Two diagonal triangles swapped by shears (affine, not Euclidean)."),
}


def builtin(name: str, **params) -> GpeSystem:
    try:
        factory = BUILTINS[name][0]
    except KeyError:
        raise KeyError(f"unknown builtin system {name!r}") from None
    return factory(**params)


# --------------------------------------------------------------------------
# description files
# --------------------------------------------------------------------------

GPE_HEADER = "gpex-gpe 1"


def format_gpe(g: GpeSystem) -> str:
    """Canonical text form.  ``parse_gpe(format_gpe(g)) == g``."""

    def verts(p: ConvexPolygon) -> str:
        return " ".join(f"{fmt_q(v.x)} {fmt_q(v.y)}" for v in p.vertices)

    lines = [GPE_HEADER, f"name {g.name}", f"flavor {g.flavor}", f"space {verts(g.space)}"]
    for atom, m in zip(g.atoms, g.maps):
        lines.append(f"atom {verts(atom)}")
        lines.append("map " + " ".join(fmt_q(v) for v in (m.a, m.b, m.c, m.d, m.e, m.f)))
    return "\n".join(lines) + "\n"


class GpeParseError(ValueError):
    pass


def _pairs(tokens: list[str], lineno: int) -> list[Point]:
    if len(tokens) % 2:
        raise GpeParseError(f"line {lineno}: odd number of coordinates")
    try:
        vals = [q(t) for t in tokens]
    except (ValueError, ZeroDivisionError) as exc:
        raise GpeParseError(f"line {lineno}: bad rational ({exc})") from None
    return [Point(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]


def parse_gpe(text: str, check: bool = True) -> GpeSystem:
    """Parse a description file.  With ``check`` the result must validate."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not numbered or numbered[0][1] != GPE_HEADER:
        raise GpeParseError(f"missing header line {GPE_HEADER!r}")
    name, flavor = "gpe", "affine"
    space: Optional[ConvexPolygon] = None
    atoms: list[ConvexPolygon] = []
    maps: list[AffineMap2] = []
    for lineno, ln in numbered[1:]:
        key, *rest = ln.split()
        try:
            if key == "name":
                name = " ".join(rest)
            elif key == "flavor":
                if len(rest) != 1 or rest[0] not in FLAVORS:
                    raise GpeParseError(f"line {lineno}: flavor must be one of {FLAVORS}")
                flavor = rest[0]
            elif key == "space":
                space = polygon(_pairs(rest, lineno))
            elif key == "atom":
                atoms.append(polygon(_pairs(rest, lineno)))
            elif key == "map":
                if len(atoms) != len(maps) + 1:
                    raise GpeParseError(f"line {lineno}: map must follow its atom")
                if len(rest) != 6:
                    raise GpeParseError(f"line {lineno}: map needs 6 rationals")
                a, b, c, d, e, f = (q(t) for t in rest)
                maps.append(AffineMap2(a, b, c, d, e, f))
            else:
                raise GpeParseError(f"line {lineno}: unknown key {key!r}")
        except GpeParseError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise GpeParseError(f"line {lineno}: {exc}") from None
    if space is None:
        raise GpeParseError("no space line")
    if len(atoms) != len(maps):
        raise GpeParseError("every atom needs a map line")
    g = GpeSystem(PolygonPartition(space, tuple(atoms)), tuple(maps), flavor, name)
    if check:
        _checked(g)
    return g
