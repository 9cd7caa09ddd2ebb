"""Iterated joins R_n of a polygon exchange and their statistics.

Cells are kept in time-0 coordinates together with the composed forward
map, so each refinement step costs one affine image and one convex
intersection per (cell, atom) pair.
"""
from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .exchange import GpeSystem
from .geometry import (
    AffineMap2,
    ConvexPolygon,
    Enclosure,
    Segment,
    apply_affine,
    decimal_text,
    dist2,
    intersect_convex,
    line_key,
    line_param,
    overlay_segments,
    perimeter,
    sqrt_enclosure,
    total_length,
)


@dataclass(frozen=True)
class JoinCell:
    itinerary: tuple[int, ...]
    region: ConvexPolygon
    forward_map: AffineMap2


@dataclass(frozen=True)
class LevelStats:
    atom_count: int
    skeleton_length: Enclosure
    multiplicity: int
    max_diameter: Enclosure
    # each cell edge counted per incident cell (secondary statistic)
    edge_sum: Enclosure


@dataclass
class JoinLevel:
    n: int
    cells: list[JoinCell]
    skeleton: list[Segment] = field(default_factory=list)
    stats: Optional[LevelStats] = None


class ResourceCapExceeded(RuntimeError):
    """Raised when a join level would exceed a cell-count or bit-length cap.

    ``levels`` holds every level completed before the cap was hit.
    """

    def __init__(self, reason: str, levels: Sequence[JoinLevel]):
        super().__init__(reason)
        self.reason = reason
        self.levels = list(levels)


@dataclass(frozen=True)
class Caps:
    max_cells: int = 200_000
    max_bits: int = 4096


def _bits(cell: JoinCell) -> int:
    m = cell.forward_map
    vals = [c for p in cell.region.vertices for c in p] + [m.a, m.b, m.c, m.d, m.e, m.f]
    return max(v.numerator.bit_length() + v.denominator.bit_length() for v in vals)


def skeleton_of(cells: Sequence[JoinCell]) -> tuple[list[Segment], Enclosure]:
    """Deduplicated 1-skeleton of the partition and its total length."""
    edges = [Segment(a, b) for c in cells for a, b in c.region.edges()]
    segs = overlay_segments(edges)
    return segs, total_length(segs)


def multiplicity(cells: Sequence[JoinCell]) -> int:
    """Largest number of cell closures through one point.

    Only skeleton vertices need checking: a vertex lies in the closure of each
    cell having it as a corner and of each cell having it inside an edge.
    """
    count: Counter = Counter()
    by_line: dict[tuple, list[tuple]] = {}
    for c in cells:
        for a, b in c.region.edges():
            count[a] += 1
            key = line_key(a, b)
            t0, t1 = sorted((line_param(key, a), line_param(key, b)))
            by_line.setdefault(key, []).append((t0, t1, a, b))
    for key, edges in by_line.items():
        params = sorted({(line_param(key, p), p) for _, _, a, b in edges for p in (a, b)})
        ts = [t for t, _ in params]
        for t0, t1, _, _ in edges:
            lo = bisect.bisect_right(ts, t0)
            hi = bisect.bisect_left(ts, t1)
            for k in range(lo, hi):
                count[params[k][1]] += 1
    return max(count.values()) if count else 0


def max_cell_diameter(cells: Sequence[JoinCell]) -> Enclosure:
    best = max(
        dist2(v[i], v[j])
        for c in cells
        for v in (c.region.vertices,)
        for i in range(len(v))
        for j in range(i + 1, len(v))
    )
    return sqrt_enclosure(best)


def _finish(n: int, cells: list[JoinCell]) -> JoinLevel:
    segs, length = skeleton_of(cells)
    edge_sum = Enclosure.exact(0)
    for c in cells:
        edge_sum = edge_sum + perimeter(c.region)
    stats = LevelStats(len(cells), length, multiplicity(cells), max_cell_diameter(cells), edge_sum)
    return JoinLevel(n, cells, segs, stats)


def first_level(g: GpeSystem) -> JoinLevel:
    cells = [JoinCell((i,), atom, m) for i, (atom, m) in enumerate(zip(g.atoms, g.maps))]
    return _finish(1, cells)


def refine_cells(cells: Sequence[JoinCell], g: GpeSystem, caps: Caps = Caps()) -> list[JoinCell]:
    out: list[JoinCell] = []
    for cell in cells:
        fwd = cell.forward_map
        image = apply_affine(fwd, cell.region)
        back = None
        for i, atom in enumerate(g.atoms):
            piece = intersect_convex(image, atom)
            if piece is None:
                continue
            if back is None:
                back = fwd.inverse()
            child = JoinCell(cell.itinerary + (i,), apply_affine(back, piece), g.maps[i].compose(fwd))
            out.append(child)
            if len(out) > caps.max_cells:
                raise ResourceCapExceeded(f"cell cap {caps.max_cells} exceeded", [])
            if _bits(child) > caps.max_bits:
                raise ResourceCapExceeded(f"bit-length cap {caps.max_bits} exceeded", [])
    out.sort(key=lambda c: c.itinerary)
    return out


def refine(level: JoinLevel, g: GpeSystem, caps: Caps = Caps()) -> JoinLevel:
    """Level n+1 from level n: split every cell by the preimages of the atoms."""
    return _finish(level.n + 1, refine_cells(level.cells, g, caps))


def join_sequence(g: GpeSystem, N: int, caps: Caps = Caps()) -> list[JoinLevel]:
    """Levels 1..N.  On a cap hit, ``ResourceCapExceeded.levels`` has the completed ones."""
    if N < 1:
        raise ValueError("N must be at least 1")
    levels = [first_level(g)]
    while len(levels) < N:
        try:
            levels.append(refine(levels[-1], g, caps))
        except ResourceCapExceeded as exc:
            raise ResourceCapExceeded(
                f"{exc.reason} while building level {levels[-1].n + 1}", levels
            ) from None
    return levels


def generating_evidence(levels: Sequence[JoinLevel]) -> str:
    """'shrinking' if max cell diameters fall to at most half their level-1 value, else
    'not generating (forward)'."""
    diam = [lv.stats.max_diameter for lv in levels]
    if len(diam) >= 2 and diam[-1].hi * 2 <= diam[0].lo and diam[-1].hi < diam[-2].lo:
        return "shrinking"
    return "not generating (forward)"


LEVEL_COLUMNS = ("n", "atom_count", "skeleton_length_lo", "skeleton_length_hi", "b", "max_diameter_hi")


def levels_csv(levels: Sequence[JoinLevel]) -> str:
    rows = [",".join(LEVEL_COLUMNS)]
    for lv in levels:
        s = lv.stats
        rows.append(
            ",".join(
                [
                    str(lv.n),
                    str(s.atom_count),
                    decimal_text(s.skeleton_length.lo),
                    decimal_text(s.skeleton_length.hi, up=True),
                    str(s.multiplicity),
                    decimal_text(s.max_diameter.hi, up=True),
                ]
            )
        )
    return "\n".join(rows) + "\n"
