"""Flag filtrations of filtered graphs and their persistence diagrams over Z/2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from ._io import atomic_write_text, fmt_float, open_text
from .filtration import FilteredGraph

INF = math.inf
DEFAULT_CLIQUE_CAP = 50_000_000


class ResourceCapError(RuntimeError):
    pass


class FilteredSimplex(NamedTuple):
    vertices: tuple[int, ...]
    value: float
    index: int

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


def build_flag_filtration(G: FilteredGraph, max_dim: int = 3, cap: int = DEFAULT_CLIQUE_CAP) -> list[FilteredSimplex]:
    """All cliques with at most ``max_dim + 1`` vertices, valued by their largest edge.

    Edges at ``inf`` are left out, so they never enter the complex. Simplices
    are ordered by (value, dimension, vertex tuple), which puts faces first.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    w: dict[tuple[int, int], float] = {}
    up: list[set[int]] = [set() for _ in range(G.n_vertices)]
    for u, v, f in G.edges:
        if f == INF:
            continue
        a, b = (u, v) if u < v else (v, u)
        w[(a, b)] = f
        up[a].add(b)

    simplices: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (v,)) for v in range(G.n_vertices)]
    count = len(simplices)

    def grow(clique: tuple[int, ...], cands: set[int], value: float):
        nonlocal count
        d = len(clique) - 1
        simplices.append((value, d, clique))
        count += 1
        if count > cap:
            raise ResourceCapError(f"flag complex exceeds {cap} simplices")
        if d >= max_dim:
            return
        for x in sorted(cands):
            val = value
            for y in clique:
                val = max(val, w[(y, x)])
            grow(clique + (x,), cands & up[x], val)

    if max_dim >= 1:
        for (a, b), f in sorted(w.items()):
            grow((a, b), up[a] & up[b], f)

    simplices.sort(key=lambda s: (s[0], s[1], s[2]))
    return [FilteredSimplex(s[2], s[0], i) for i, s in enumerate(simplices)]


@dataclass
class PersistenceDiagram:
    """Points ``(degree, birth, death)``; ``death`` may be ``inf``.

    ``max_value`` is the largest finite filtration value of the complex the
    diagram came from; it sets the cap used for essential points downstream.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    max_value: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.size:
            order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
            pts = pts[order]
        self.points = pts

    def degree(self, d: int) -> np.ndarray:
        """``(k, 2)`` array of (birth, death) in degree ``d``."""
        return self.points[self.points[:, 0] == d][:, 1:3]

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))


def _boundary(s: FilteredSimplex, index_of: dict) -> list[int]:
    if len(s.vertices) == 1:
        return []
    return [index_of[f] for f in combinations(s.vertices, len(s.vertices) - 1)]


def compute_persistence(
    filtration: Sequence[FilteredSimplex],
    drop_zero_persistence: bool = True,
    max_degree: int = 2,
) -> PersistenceDiagram:
    """Column reduction with clearing, top dimension first.

    Columns are Python ints used as Z/2 bit vectors, bit ``i`` being simplex
    ``i`` of the filtration order.
    """
    index_of = {s.vertices: s.index for s in filtration}
    n = len(filtration)
    dims = [s.dim for s in filtration]
    top = max(dims, default=0)
    cleared = bytearray(n)
    paired = bytearray(n)
    pivot_col: dict[int, int] = {}  # low -> reduced column bits
    pairs: list[tuple[int, int]] = []

    for d in range(top, 0, -1):
        for s in filtration:
            if s.dim != d or cleared[s.index]:
                continue
            col = 0
            for f in _boundary(s, index_of):
                col ^= 1 << f
            while col:
                low = col.bit_length() - 1
                other = pivot_col.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                low = col.bit_length() - 1
                pivot_col[low] = col
                cleared[low] = 1
                paired[low] = paired[s.index] = 1
                pairs.append((low, s.index))

    pts = []
    vmax = max((s.value for s in filtration if s.value != INF), default=0.0)
    for b, dth in pairs:
        deg = dims[b]
        if deg > max_degree:
            continue
        birth, death = filtration[b].value, filtration[dth].value
        if drop_zero_persistence and birth == death:
            continue
        pts.append((deg, birth, death))
    for i in range(n):
        if not paired[i] and dims[i] <= max_degree:
            pts.append((dims[i], filtration[i].value, INF))
    return PersistenceDiagram(np.array(pts, dtype=float).reshape(-1, 3), float(vmax))


def diagram(G: FilteredGraph, max_degree: int = 2, drop_zero_persistence: bool = True,
            cap: int = DEFAULT_CLIQUE_CAP) -> PersistenceDiagram:
    """Persistence diagram of the flag filtration of ``G`` in degrees ``0..max_degree``."""
    filt = build_flag_filtration(G, max_dim=max_degree + 1, cap=cap)
    return compute_persistence(filt, drop_zero_persistence, max_degree)


def threshold_diagram(D: PersistenceDiagram, min_persistence: float) -> PersistenceDiagram:
    if min_persistence < 0:
        raise ValueError("min_persistence must be non-negative")
    pts = D.points
    life = pts[:, 2] - pts[:, 1]
    keep = np.isinf(pts[:, 2]) | (life >= min_persistence)
    return PersistenceDiagram(pts[keep], D.max_value)


# --------------------------------------------------------------------------
# IO: ``dim birth death`` lines

def format_diagram(D: PersistenceDiagram) -> str:
    lines = [f"# max_value {fmt_float(D.max_value)}"]
    lines += [f"{int(d)} {fmt_float(b)} {fmt_float(x)}" for d, b, x in D.points]
    return "\n".join(lines) + "\n"


def write_diagram(D: PersistenceDiagram, path) -> None:
    atomic_write_text(Path(path), format_diagram(D))


def read_diagram(path) -> PersistenceDiagram:
    pts = []
    vmax = None
    with open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].split()
                if body[:1] == ["max_value"] and len(body) == 2:
                    vmax = float(body[1])
                continue
            parts = s.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'dim birth death'")
            pts.append((int(parts[0]), float(parts[1]), float(parts[2])))
    arr = np.array(pts, dtype=float).reshape(-1, 3)
    if vmax is None:
        finite = arr[:, 1:][np.isfinite(arr[:, 1:])]
        vmax = float(finite.max()) if finite.size else 0.0
    return PersistenceDiagram(arr, vmax)
