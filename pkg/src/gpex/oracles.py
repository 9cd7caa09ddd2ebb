"""Brute-force float oracles, independent of the exact join machinery."""
from __future__ import annotations

import numpy as np

from .exchange import GpeSystem


def _float_atoms(g: GpeSystem):
    atoms = [np.array([[float(x), float(y)] for x, y in a.vertices]) for a in g.atoms]
    maps = [np.array([[float(m.a), float(m.b), float(m.e)], [float(m.c), float(m.d), float(m.f)]]) for m in g.maps]
    return atoms, maps


def grid_itineraries(g: GpeSystem, n: int, m: int = 997, margin: float = 1e-10):
    """Length-n itineraries of a cell-centred m x m grid over the bounding box of X.

    Returns (words, ok); rows with ok False left X or came within ``margin``
    of an atom boundary.
    """
    x0, y0, x1, y1 = (float(v) for v in g.space.bbox())
    u = (np.arange(m) + 0.5) / m
    X, Y = np.meshgrid(x0 + (x1 - x0) * u, y0 + (y1 - y0) * u, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    atoms, maps = _float_atoms(g)
    words = np.full((len(P), n), -1, dtype=np.int64)
    ok = np.ones(len(P), dtype=bool)
    for j in range(n):
        label = np.full(len(P), -1)
        for i, v in enumerate(atoms):
            e = np.roll(v, -1, axis=0) - v
            # signed distance to each edge line; positive inside a CCW polygon
            d = (e[:, 0] * (P[:, 1:2] - v[:, 1]) - e[:, 1] * (P[:, 0:1] - v[:, 0])) / np.hypot(e[:, 0], e[:, 1])
            inside = np.all(d > margin, axis=1)
            label = np.where(inside, i, label)
        ok &= label >= 0
        words[:, j] = label
        nxt = P.copy()
        for i, A in enumerate(maps):
            sel = label == i
            nxt[sel] = P[sel] @ A[:, :2].T + A[:, 2]
        P = nxt
    return words, ok


def grid_join_count(g: GpeSystem, n: int, m: int = 997) -> int:
    """Number of distinct length-n itineraries seen on the grid."""
    words, ok = grid_itineraries(g, n, m)
    code = words[ok] @ (len(g.atoms) ** np.arange(n, dtype=np.int64))
    return len(np.unique(code))
