"""The polygonal billiard ball map on X = boundary x [0, pi].

Phase points are ``(s, theta)``: arc length of the footpoint measured
counterclockwise from vertex 0, and the angle from the forward tangent to
the outgoing (inward) direction.  The phase map runs in floating point with
a vertex tolerance; itinerary counting is exact, through unfolding the
table by rational reflections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .geometry import (
    AffineMap2,
    ConvexPolygon,
    Enclosure,
    Point,
    clip_halfplane,
    cross,
    fmt_q,
    point,
    q,
    reflection_across,
    segment_length,
)

EPS = np.finfo(float).eps


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------


def _segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool:
    d1, d2 = cross(a, b, c), cross(a, b, d)
    d3, d4 = cross(c, d, a), cross(c, d, b)
    return ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4))


@dataclass(frozen=True)
class BilliardTable:
    vertices: tuple[Point, ...]
    name: str = "table"
    vertex_tol: Optional[float] = None
    _f: dict = field(default=None, compare=False, repr=False)

    @classmethod
    def from_vertices(cls, pts: Sequence, name: str = "table", vertex_tol: Optional[float] = None) -> "BilliardTable":
        """Simple polygon from a vertex cycle; reoriented counterclockwise."""
        vs = [p if isinstance(p, Point) else point(*p) for p in pts]
        k = len(vs)
        if k < 3:
            raise ValueError("a table needs at least three vertices")
        if len(set(vs)) != k:
            raise ValueError("table vertices must be pairwise distinct")
        signed = sum(vs[i].x * vs[(i + 1) % k].y - vs[(i + 1) % k].x * vs[i].y for i in range(k))
        if signed == 0:
            raise ValueError("table has zero area")
        if signed < 0:
            vs = [vs[0]] + vs[:0:-1]
        for i in range(k):
            if cross(vs[i - 1], vs[i], vs[(i + 1) % k]) == 0:
                raise ValueError(f"vertex {i} is not a corner (collinear neighbours)")
        for i in range(k):
            for j in range(i + 2, k):
                if i == 0 and j == k - 1:
                    continue
                if _segments_cross(vs[i], vs[(i + 1) % k], vs[j], vs[(j + 1) % k]):
                    raise ValueError("table boundary is not simple")
        table = cls(tuple(vs), name, vertex_tol)
        object.__setattr__(table, "_f", _float_data(table))
        return table

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def sides(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    @property
    def perimeter(self) -> Enclosure:
        total = Enclosure.exact(0)
        for a, b in self.sides:
            total = total + segment_length(a, b)
        return total

    @property
    def convex(self) -> bool:
        v, k = self.vertices, len(self.vertices)
        return all(cross(v[i - 1], v[i], v[(i + 1) % k]) > 0 for i in range(k))

    @property
    def L(self) -> float:
        return self._f["L"]

    @property
    def offsets(self) -> np.ndarray:
        return self._f["off"]

    @property
    def tol(self) -> float:
        return self.vertex_tol if self.vertex_tol is not None else 1e-12 * self.L


def _float_data(t: BilliardTable) -> dict:
    V = np.array([[float(p.x), float(p.y)] for p in t.vertices])
    E = np.roll(V, -1, axis=0) - V
    lens = np.hypot(E[:, 0], E[:, 1])
    tang = E / lens[:, None]
    nrm = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
    off = np.concatenate([[0.0], np.cumsum(lens)])
    return {"V": V, "E": E, "lens": lens, "tang": tang, "nrm": nrm, "off": off, "L": float(off[-1])}


def unit_square() -> BilliardTable:
    return BilliardTable.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)], name="square")


def right_triangle() -> BilliardTable:
    return BilliardTable.from_vertices([(0, 0), (1, 0), (0, 1)], name="right-triangle")


TABLES = {
    "square": unit_square,
    "right-triangle": right_triangle,
}

TABLE_HEADER = "gpex-table 1"


def format_table(t: BilliardTable) -> str:
    lines = [TABLE_HEADER, f"name {t.name}"]
    lines += [f"vertex {fmt_q(p.x)} {fmt_q(p.y)}" for p in t.vertices]
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> BilliardTable:
    rows = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln]
    if not rows or rows[0][1] != TABLE_HEADER:
        raise ValueError(f"missing header line {TABLE_HEADER!r}")
    name, verts = "table", []
    for lineno, ln in rows[1:]:
        key, *rest = ln.split()
        if key == "name":
            name = " ".join(rest)
        elif key == "vertex":
            if len(rest) != 2:
                raise ValueError(f"line {lineno}: vertex needs two rationals")
            verts.append(point(*rest))
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return BilliardTable.from_vertices(verts, name)


# --------------------------------------------------------------------------
# the phase map
# --------------------------------------------------------------------------


class PhasePoint(NamedTuple):
    s: float
    theta: float
    # accumulated rounding estimate (absolute, in s and theta)
    err: float = 0.0


class VertexHit(NamedTuple):
    vertex: int
    step: int = 0


def reverse(p: PhasePoint) -> PhasePoint:
    return PhasePoint(p.s, math.pi - p.theta, p.err)


def _side_of(t: BilliardTable, s: np.ndarray) -> np.ndarray:
    k = len(t)
    return np.clip(np.searchsorted(t.offsets, s, side="right") - 1, 0, k - 1)


def trace(t: BilliardTable, s, theta):
    """Vectorized phase map.

    Returns ``(s1, theta1, hit_side, vertex)`` where ``vertex`` is the index of
    the vertex passed within the tolerance, or -1.  Entries with a vertex hit
    carry NaN coordinates.
    """
    f = t._f
    s = np.asarray(s, dtype=float) % f["L"]
    theta = np.asarray(theta, dtype=float)
    side = _side_of(t, s)
    u = s - f["off"][side]
    foot = f["V"][side] + u[:, None] * f["tang"][side]
    d = np.cos(theta)[:, None] * f["tang"][side] + np.sin(theta)[:, None] * f["nrm"][side]
    V, E = f["V"], f["E"]
    rel = V[None, :, :] - foot[:, None, :]
    denom = d[:, None, 0] * E[None, :, 1] - d[:, None, 1] * E[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = (rel[..., 0] * E[None, :, 1] - rel[..., 1] * E[None, :, 0]) / denom
        w = (rel[..., 0] * d[:, None, 1] - rel[..., 1] * d[:, None, 0]) / denom
    wtol = 1e-15
    ok = (np.abs(denom) > 0) & (w >= -wtol) & (w <= 1 + wtol) & (tau > 1e-12 * f["L"])
    ok[np.arange(len(s)), side] = False
    tau = np.where(ok, tau, np.inf)
    hit = np.argmin(tau, axis=1)
    rows = np.arange(len(s))
    wh = np.clip(w[rows, hit], 0.0, 1.0)
    along = wh * f["lens"][hit]
    k = len(t)
    vertex = np.full(len(s), -1)
    near_start = along < t.tol
    near_end = f["lens"][hit] - along < t.tol
    vertex[near_start] = hit[near_start]
    vertex[near_end] = (hit[near_end] + 1) % k
    vertex[~np.isfinite(tau[rows, hit])] = -2
    dn = np.einsum("ij,ij->i", d, f["nrm"][hit])
    dref = d - 2 * dn[:, None] * f["nrm"][hit]
    theta1 = np.arctan2(np.einsum("ij,ij->i", dref, f["nrm"][hit]), np.einsum("ij,ij->i", dref, f["tang"][hit]))
    s1 = f["off"][hit] + along
    bad = vertex != -1
    s1 = np.where(bad, np.nan, s1)
    theta1 = np.where(bad, np.nan, theta1)
    return s1, theta1, hit, vertex


def trace_reverse(t: BilliardTable, s, theta):
    """Vectorized inverse map: reverse, apply the map, reverse."""
    s1, th1, hit, vertex = trace(t, s, np.pi - np.asarray(theta, dtype=float))
    return s1, np.pi - th1, hit, vertex


def _check_phase(t: BilliardTable, p: PhasePoint) -> None:
    if not (0 < p.theta < math.pi):
        raise ValueError("theta must lie strictly between 0 and pi")
    s = p.s % t.L
    off = t.offsets
    if np.min(np.abs(off - s)) < t.tol:
        raise ValueError("footpoint lies on a vertex fiber")


def billiard_map(t: BilliardTable, p: PhasePoint) -> Union[PhasePoint, VertexHit]:
    p = PhasePoint(*p)
    _check_phase(t, p)
    s1, th1, hit, vertex = trace(t, [p.s], [p.theta])
    if vertex[0] >= 0:
        return VertexHit(int(vertex[0]))
    if vertex[0] == -2:
        raise ValueError("ray does not meet the boundary")
    # rounding in the footpoint, the ray and the reflection, amplified by 1/sin(theta1)
    err = p.err / max(math.sin(th1[0]), EPS) + 16 * EPS * t.L / max(math.sin(th1[0]), EPS)
    return PhasePoint(float(s1[0]), float(th1[0]), err)


def billiard_inverse(t: BilliardTable, p: PhasePoint) -> Union[PhasePoint, VertexHit]:
    img = billiard_map(t, reverse(PhasePoint(*p)))
    return img if isinstance(img, VertexHit) else reverse(img)


def orbit(t: BilliardTable, p: PhasePoint, n: int) -> list[Union[PhasePoint, VertexHit]]:
    out: list = [PhasePoint(*p)]
    for step in range(n):
        nxt = billiard_map(t, out[-1])
        if isinstance(nxt, VertexHit):
            out.append(VertexHit(nxt.vertex, step))
            break
        out.append(nxt)
    return out


def phase_point(t: BilliardTable, side: int, x, theta: float) -> PhasePoint:
    """Phase point with footpoint a fraction ``x`` of the way along ``side``."""
    return PhasePoint(float(t.offsets[side] + float(q(x)) * t._f["lens"][side]), theta)


# --------------------------------------------------------------------------
# Finsler length
# --------------------------------------------------------------------------


def finsler_length(s, theta) -> float:
    """Length of the polyline in |ds| sin(theta) + |dtheta|, trapezoidal in sin(theta)."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if len(s) < 2:
        return 0.0
    sn = np.sin(theta)
    return float(np.sum(np.abs(np.diff(s)) * (sn[:-1] + sn[1:]) / 2 + np.abs(np.diff(theta))))


# --------------------------------------------------------------------------
# first-return partition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VertexCurve:
    """Footpoints on ``side`` aimed at ``vertex``: theta as a function of u in (0, 1)."""

    side: int
    vertex: int

    def theta(self, t: BilliardTable, u) -> np.ndarray:
        f = t._f
        u = np.asarray(u, dtype=float)
        foot = f["V"][self.side] + u[..., None] * f["E"][self.side]
        rel = f["V"][self.vertex] - foot
        return np.arctan2(rel @ f["nrm"][self.side], rel @ f["tang"][self.side])

    def s(self, t: BilliardTable, u) -> np.ndarray:
        f = t._f
        return f["off"][self.side] + np.asarray(u, dtype=float) * f["lens"][self.side]


@dataclass(frozen=True)
class FirstReturnPartition:
    curves: tuple[VertexCurve, ...]
    # per side: the sides hit first, in order of increasing theta
    atom_labels: tuple[tuple[int, ...], ...]

    @property
    def atom_count(self) -> int:
        return sum(len(lbl) for lbl in self.atom_labels)


def _require_convex(t: BilliardTable) -> None:
    if not t.convex:
        raise ValueError("this operation supports convex tables only")


def first_return_partition(t: BilliardTable) -> FirstReturnPartition:
    """Vertex curves bounding the atoms of the first-return partition."""
    _require_convex(t)
    k = len(t)
    curves = [
        VertexCurve(i, v) for i in range(k) for v in range(k) if v not in (i, (i + 1) % k)
    ]
    return FirstReturnPartition(tuple(curves), tuple(_labels_for_side(t, i) for i in range(k)))


def _labels_for_side(t: BilliardTable, i: int) -> tuple[int, ...]:
    # probe the midpoint of side i between consecutive vertex curves
    k = len(t)
    far = [v for v in range(k) if v not in (i, (i + 1) % k)]
    angles = sorted(float(VertexCurve(i, v).theta(t, 0.5)) for v in far)
    cuts = [0.0] + angles + [math.pi]
    probes = [(cuts[j] + cuts[j + 1]) / 2 for j in range(len(cuts) - 1)]
    s0 = t.offsets[i] + 0.5 * t._f["lens"][i]
    _, _, hit, vertex = trace(t, np.full(len(probes), s0), np.array(probes))
    assert np.all(vertex == -1)
    return tuple(int(h) for h in hit)


# --------------------------------------------------------------------------
# exact itinerary counting by unfolding
# --------------------------------------------------------------------------


def _dot3(h, v):
    return h[0] * v[0] + h[1] * v[1] + h[2] * v[2]


def _cross3(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


class _Section:
    """Affine chart {v : H.v = 1} of line-coefficient space (a, b, c).

    A directed line is a x + b y + c = 0 with its left side positive.
    """

    def __init__(self, H):
        hh = _dot3(H, H)
        self.v0 = tuple(c / hh for c in H)
        cands = [_cross3(H, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
        cands = [c for c in cands if any(x != 0 for x in c)]
        e1 = cands[0]
        e2 = _cross3(H, e1)
        self.e1, self.e2 = e1, e2

    def halfplane(self, h):
        """h . v > 0 written as normal . (s, t) <= offset (closed form)."""
        return (-_dot3(h, self.e1), -_dot3(h, self.e2)), _dot3(h, self.v0)


def _constraint(p: Point, left: bool):
    h = (p.x, p.y, q(1))
    return h if left else (-h[0], -h[1], -h[2])


def _crossing_constraints(a: Point, b: Point, left_first: bool):
    """Line separates a (left) from b (right), or the reverse."""
    return (_constraint(a, left_first), _constraint(b, not left_first))


def _initial_region(section: _Section, constraints) -> Optional[ConvexPolygon]:
    planes = [section.halfplane(h) for h in constraints]
    pts = []
    for i in range(len(planes)):
        for j in range(i + 1, len(planes)):
            (a1, b1), c1 = planes[i]
            (a2, b2), c2 = planes[j]
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            x = (c1 * b2 - c2 * b1) / det
            y = (a1 * c2 - a2 * c1) / det
            if all(n[0] * x + n[1] * y <= o for n, o in planes):
                pts.append(Point(x, y))
    if len(pts) < 3:
        return None
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    region = ConvexPolygon.from_hull(
        [Point(min(xs) - 1, min(ys) - 1), Point(max(xs) + 1, min(ys) - 1), Point(max(xs) + 1, max(ys) + 1), Point(min(xs) - 1, max(ys) + 1)]
    )
    for n, o in planes:
        region = clip_halfplane(region, n, o)
        if region is None:
            return None
    return region


class BudgetExceeded(RuntimeError):
    pass


def _clip_all(region, section: _Section, constraints):
    for h in constraints:
        normal, offset = section.halfplane(h)
        region = clip_halfplane(region, normal, offset)
        if region is None:
            return None
    return region


def feasible_words(t: BilliardTable, n: int, max_nodes: int = 10_000_000) -> list[tuple[int, ...]]:
    """Side sequences (s_0, ..., s_n) realized by an open set of billiard trajectories.

    A word is feasible iff some directed line crosses the successive unfolded
    sides with the right orientation; the feasible lines form a convex cone,
    tracked as a polygon in a fixed affine chart and clipped side by side.
    """
    _require_convex(t)
    if n < 1:
        raise ValueError("n must be at least 1")
    k = len(t)
    verts = t.vertices
    out: list[tuple[int, ...]] = []
    nodes = 0

    def side_pts(iso: AffineMap2, j: int):
        return iso(verts[j]), iso(verts[(j + 1) % k])

    ident = AffineMap2.identity()
    for s0 in range(k):
        a0, b0 = side_pts(ident, s0)
        for s1 in range(k):
            if s1 == s0:
                continue
            a1, b1 = side_pts(ident, s1)
            # entering s0 puts its start vertex on the left; leaving s1 its end vertex
            cons = [_constraint(a0, True), _constraint(b0, False), _constraint(b1, True), _constraint(a1, False)]
            section = _Section(tuple(sum(h[c] for h in cons) for c in range(3)))
            region = _initial_region(section, cons)
            if region is None:
                continue
            stack = [((s0, s1), ident, (a1, b1), region)]
            while stack:
                word, iso, seg, region = stack.pop()
                if len(word) == n + 1:
                    out.append(word)
                    continue
                nxt = reflection_across(*seg).compose(iso)
                ccw = nxt.det > 0
                for j in range(k):
                    if j == word[-1]:
                        continue
                    nodes += 1
                    if nodes > max_nodes:
                        raise BudgetExceeded(f"node budget {max_nodes} exceeded at depth {len(word)}")
                    a, b = side_pts(nxt, j)
                    left, right = (b, a) if ccw else (a, b)
                    r = _clip_all(region, section, (_constraint(left, True), _constraint(right, False)))
                    if r is not None:
                        stack.append((word + (j,), nxt, (a, b), r))
    out.sort()
    return out


def count_itinerary_cells(t: BilliardTable, n: int, max_nodes: int = 10_000_000) -> int:
    """Number of atoms of the n-th join of the first-return partition."""
    return len(feasible_words(t, n, max_nodes))


# --------------------------------------------------------------------------
# grid classification (independent float oracle)
# --------------------------------------------------------------------------


def phase_grid(t: BilliardTable, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centred m x m grid on [0, L) x (0, pi), flattened."""
    s = (np.arange(m) + 0.5) * (t.L / m)
    th = (np.arange(m) + 0.5) * (np.pi / m)
    S, TH = np.meshgrid(s, th, indexing="ij")
    return S.ravel(), TH.ravel()


def grid_words(t: BilliardTable, n: int, s: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Side words (s_0..s_n) of the given phase points and a mask of points regular for n bounces."""
    k = len(t)
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    words = np.empty((len(s), n + 1), dtype=np.int64)
    words[:, 0] = _side_of(t, s % t.L)
    ok = np.min(np.abs(s[:, None] - t.offsets[None, :]), axis=1) >= t.tol
    for j in range(n):
        s, theta, hit, vertex = trace(t, np.where(ok, s, t.L / 2 / k), np.where(ok, theta, np.pi / 2))
        words[:, j + 1] = hit
        ok &= vertex == -1
    return words, ok


def grid_itinerary_count(t: BilliardTable, n: int, m: int = 2000, chunk: int = 250_000) -> int:
    """Distinct n-bounce side words seen on an m x m phase grid."""
    S, TH = phase_grid(t, m)
    k = len(t)
    seen: set = set()
    weights = k ** np.arange(n + 1, dtype=np.int64)
    for a in range(0, len(S), chunk):
        words, ok = grid_words(t, n, S[a : a + chunk], TH[a : a + chunk])
        seen.update(np.unique(words[ok] @ weights).tolist())
    return len(seen)


# --------------------------------------------------------------------------
# singular set tracking
# --------------------------------------------------------------------------


@dataclass
class SingularCurve:
    s: np.ndarray
    theta: np.ndarray
    generation: int
    label: tuple[int, int]
    truncated: bool = False

    @property
    def length(self) -> float:
        return finsler_length(self.s, self.theta)


@dataclass
class SingularSet:
    curves: list[SingularCurve]
    generation_lengths: list[float]
    truncated: bool

    @property
    def total_length(self) -> float:
        return float(sum(self.generation_lengths))


def _finsler_gaps(s: np.ndarray, th: np.ndarray) -> np.ndarray:
    sn = np.sin(th)
    return np.abs(np.diff(s)) * (sn[:-1] + sn[1:]) / 2 + np.abs(np.diff(th))


class _Tracker:
    """Images of the vertex curves under powers of one step map.

    ``backward`` steps with the inverse map from the curves themselves;
    otherwise the forward map acts on their time reversals.
    """

    def __init__(self, t: BilliardTable, backward: bool, gap: float, max_samples: int, init: int):
        self.t = t
        self.step = trace_reverse if backward else trace
        self.backward = backward
        self.gap = gap
        self.max_samples = max_samples
        self.init = init
        self.utol = 1e-13

    def base(self, c: VertexCurve, u: np.ndarray):
        th = c.theta(self.t, u)
        return c.s(self.t, u), (th if self.backward else np.pi - th)

    def chain(self, c: VertexCurve, u: np.ndarray, g: int):
        """Images after g steps, the label of the last step and a vertex flag."""
        s, th = self.base(c, u)
        lab = np.full(len(u), -1)
        bad = np.zeros(len(u), dtype=bool)
        for _ in range(g):
            s, th, lab, vtx = self.step(self.t, s, th)
            bad |= vtx != -1
            s = np.where(bad, self.t.L / 2, s)
            th = np.where(bad, np.pi / 2, th)
        return s, th, lab, bad

    def advance(self, c: VertexCurve, g: int, u: np.ndarray):
        """Split samples u of a generation-(g-1) piece into generation-g pieces."""
        u = np.asarray(u, dtype=float)
        s, th, lab, bad = self.chain(c, u, g)
        truncated = False
        while True:
            split = (lab[:-1] != lab[1:]) | bad[:-1] | bad[1:]
            wide = np.diff(u) > self.utol * max(1.0, abs(u[0]))
            need = wide & (split | (_finsler_gaps(s, th) > self.gap))
            if not need.any():
                break
            if len(u) + int(need.sum()) > self.max_samples:
                truncated = True
                break
            idx = np.nonzero(need)[0]
            mid = (u[idx] + u[idx + 1]) / 2
            ms, mth, mlab, mbad = self.chain(c, mid, g)
            order = np.argsort(np.concatenate([u, mid]), kind="stable")
            u = np.concatenate([u, mid])[order]
            s = np.concatenate([s, ms])[order]
            th = np.concatenate([th, mth])[order]
            lab = np.concatenate([lab, mlab])[order]
            bad = np.concatenate([bad, mbad])[order]
        pieces = []
        start = None
        for i in range(len(u)):
            if bad[i]:
                if start is not None:
                    pieces.append((start, i))
                start = None
                continue
            if start is None:
                start = i
            elif lab[i] != lab[i - 1]:
                pieces.append((start, i))
                start = i
        if start is not None:
            pieces.append((start, len(u)))
        return [(u[a:b], s[a:b], th[a:b]) for a, b in pieces if b - a >= 2], truncated


def singular_set(
    t: BilliardTable,
    n: int,
    gap: float = 0.02,
    max_samples: int = 200_000,
    init: int = 33,
    backward: bool = True,
) -> SingularSet:
    """The union of T^-k (boundary of P) for k < n as sampled curves, with Finsler lengths.

    With ``backward=False`` the forward images T^k of the time-reversed vertex
    curves are tracked instead; by reversibility both have the same lengths.
    """
    _require_convex(t)
    if n < 1:
        raise ValueError("n must be at least 1")
    tracker = _Tracker(t, backward, gap, max_samples, init)
    margin = 1e-9
    curves: list[SingularCurve] = []
    gen_len = [0.0] * n
    any_trunc = False
    for c in first_return_partition(t).curves:
        label = (c.side, c.vertex)
        frontier = []
        u0 = np.linspace(margin, 1 - margin, init)
        pieces, trunc = tracker.advance(c, 0, u0)
        any_trunc |= trunc
        for g in range(n):
            nxt = []
            for u, s, th in pieces:
                sc = SingularCurve(s, th, g, label, trunc)
                curves.append(sc)
                gen_len[g] += sc.length
                if g + 1 < n:
                    sub, tr = tracker.advance(c, g + 1, u)
                    any_trunc |= tr
                    nxt.extend(sub)
            pieces = nxt
            trunc = False
        del frontier
    return SingularSet(curves, gen_len, any_trunc)


def singular_csv(table_counts: Sequence[int], lengths: Sequence[float], truncated: Sequence[bool]) -> str:
    rows = ["n,cell_count,singular_length,length_lower_bound_flag"]
    for n, (c, ln, tr) in enumerate(zip(table_counts, lengths, truncated), start=1):
        rows.append(f"{n},{c},{ln:.12g},{int(tr)}")
    return "\n".join(rows) + "\n"


def curves_dump(ss: SingularSet) -> str:
    rows = ["# s theta curve_id generation"]
    for cid, c in enumerate(ss.curves):
        rows.extend(f"{a:.17g} {b:.17g} {cid} {c.generation}" for a, b in zip(c.s, c.theta))
    return "\n".join(rows) + "\n"


# --------------------------------------------------------------------------
# structural report
# --------------------------------------------------------------------------


@dataclass
class GpeCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class GpeReport:
    table: str
    atom_count: int
    checks: list[GpeCheck]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        rows = [f"table = {self.table}", f"atom_count = {self.atom_count}"]
        rows += [f"{c.name} = {'pass' if c.passed else 'fail'} ({c.detail})" for c in self.checks]
        return "\n".join(rows) + "\n"


def _grid_atoms(t: BilliardTable, m: int):
    S, TH = phase_grid(t, m)
    words, ok = grid_words(t, 1, S, TH)
    code = np.where(ok, words[:, 0] * len(t) + words[:, 1], -1).reshape(m, m)
    return S.reshape(m, m), TH.reshape(m, m), code


def _image_jumps(t: BilliardTable, S, TH, comp, min_sin: float) -> float:
    s1, th1, _, vtx = trace(t, S.ravel(), TH.ravel())
    s1, th1, vtx = s1.reshape(S.shape), th1.reshape(S.shape), vtx.reshape(S.shape)
    worst = 0.0
    keep = (np.sin(TH) >= min_sin) & (vtx == -1) & (comp > 0)
    for axis in (0, 1):
        a = (slice(None, -1), slice(None)) if axis == 0 else (slice(None), slice(None, -1))
        b = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        same = keep[a] & keep[b] & (comp[a] == comp[b])
        if same.any():
            # Finsler gap: s is only controlled up to the factor sin(theta')
            jump = np.abs(s1[a] - s1[b]) * (np.sin(th1[a]) + np.sin(th1[b])) / 2 + np.abs(th1[a] - th1[b])
            worst = max(worst, float(jump[same].max()))
    return worst


def as_gpe_report(t: BilliardTable, m: int = 400, min_sin: float = 0.05) -> GpeReport:
    """Grid evidence that (X, P, T) is a polygon exchange for a convex table."""
    from scipy import ndimage

    part = first_return_partition(t)
    checks: list[GpeCheck] = []
    jumps, uncovered = [], []
    for size in (m, 2 * m):
        S, TH, code = _grid_atoms(t, size)
        comp = np.zeros(code.shape, dtype=np.int64)
        n_comp, split, holes = 0, [], 0
        for c in np.unique(code[code >= 0]):
            lab, k = ndimage.label(code == c)
            if k != 1:
                split.append((int(c) // len(t), int(c) % len(t), k))
            for j in range(1, k + 1):
                mask = lab == j
                if not np.array_equal(ndimage.binary_fill_holes(mask), mask):
                    holes += 1
            comp[lab > 0] = lab[lab > 0] + n_comp
            n_comp += k
        if size == m:
            checks.append(GpeCheck("grid_atom_count", n_comp == part.atom_count, f"{n_comp} components, {part.atom_count} atoms"))
            checks.append(GpeCheck("atoms_connected", not split, "none split" if not split else f"split {split}"))
            checks.append(GpeCheck("atoms_simply_connected", holes == 0, f"{holes} with holes"))
        boundary = np.zeros(code.shape, dtype=bool)
        boundary[:-1] |= code[:-1] != code[1:]
        boundary[1:] |= code[:-1] != code[1:]
        boundary[:, :-1] |= code[:, :-1] != code[:, 1:]
        boundary[:, 1:] |= code[:, :-1] != code[:, 1:]
        boundary |= code < 0
        uncovered.append(float(boundary.mean()))
        jumps.append(_image_jumps(t, S, TH, comp, min_sin))
    checks.append(
        GpeCheck(
            "uncovered_fraction_shrinks",
            uncovered[1] < uncovered[0],
            f"{uncovered[0]:.3g} at m={m}, {uncovered[1]:.3g} at m={2 * m}",
        )
    )
    checks.append(
        GpeCheck(
            "continuous_on_atoms",
            jumps[1] <= 0.75 * jumps[0],
            f"max neighbour Finsler image gap {jumps[0]:.3g} -> {jumps[1]:.3g} (sin theta >= {min_sin})",
        )
    )
    # reversal consistency: T^-1 undoes T, so inverse atoms are reversal images
    S, TH, code = _grid_atoms(t, m)
    s1, th1, _, vtx = trace(t, S.ravel(), TH.ravel())
    ok = (vtx == -1) & (code.ravel() >= 0)
    s2, th2, hit, vtx2 = trace_reverse(t, s1[ok], th1[ok])
    back = (vtx2 == -1) & (hit == code.ravel()[ok] // len(t))
    err = np.abs(s2 - S.ravel()[ok]) + np.abs(th2 - TH.ravel()[ok])
    worst = float(err[back].max()) if back.any() else math.inf
    checks.append(
        GpeCheck(
            "reversal_consistent",
            bool(back.all()) and worst < 1e-9,
            f"{int((~back).sum())} label mismatches, max return error {worst:.2g}",
        )
    )
    return GpeReport(t.name, part.atom_count, checks)
