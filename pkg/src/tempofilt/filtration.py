"""Edge filtrations of temporal graphs and the static benchmark filtrations.

Every filtration returns a :class:`FilteredGraph` on the aggregate graph with
vertex values fixed at 0. Edges with no adjacent temporal edge never take part
in a 3-node 2-edge motif and get ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np

from ._io import atomic_write_text, fmt_float, open_text
from .tgraph import AggregateGraph, TemporalGraph, aggregate, temporal_degrees

INF = math.inf

TEMPORAL_METHODS = ("min", "avg", "avg-mlt")
STATIC_METHODS = ("add-max-deg", "add-core-num", "add-triangle")
METHODS = TEMPORAL_METHODS + STATIC_METHODS

# above this temporal degree the pairwise sweep is done in row blocks
_SWEEP_BLOCK = 2048


class MultiLabeledError(ValueError):
    pass


@dataclass(frozen=True)
class FilteredGraph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for u, v, f in self.edges:
            if u == v or not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"bad edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"parallel edge {key}")
            seen.add(key)
            if not (f >= 0 or f == INF):
                raise ValueError(f"filtration value {f} on edge {key} is negative")

    @classmethod
    def from_values(cls, n_vertices: int, pairs: Iterable[tuple[int, int]], values: Iterable[float]):
        return cls(n_vertices, tuple((int(u), int(v), float(f)) for (u, v), f in zip(pairs, values)))

    def values(self) -> dict[tuple[int, int], float]:
        return {(u, v): f for u, v, f in self.edges}

    def finite_values(self) -> np.ndarray:
        return np.array([f for _, _, f in self.edges if f != INF], dtype=np.float64)

    def max_finite(self) -> float:
        vals = self.finite_values()
        return float(vals.max()) if vals.size else 0.0


# --------------------------------------------------------------------------
# temporal filtrations

def _incidence(n_vertices: int, u: np.ndarray, v: np.ndarray) -> list[np.ndarray]:
    """Per-vertex arrays of incident edge indices (edge order preserved)."""
    ends = np.concatenate([u, v])
    eid = np.concatenate([np.arange(u.size), np.arange(v.size)])
    order = np.lexsort((eid, ends))
    bounds = np.searchsorted(ends[order], np.arange(n_vertices + 1))
    return [eid[order[bounds[i]:bounds[i + 1]]] for i in range(n_vertices)]


def _require_single(T: TemporalGraph, name: str):
    if not T.single_labeled:
        raise MultiLabeledError(
            f"{name} needs a single-labeled temporal graph; use avg_filtration_multi for multi-labeled input"
        )


def _pairs(T: TemporalGraph):
    return [e.pair for e in T.edges]


def min_filtration(T: TemporalGraph) -> FilteredGraph:
    """Smallest timestamp gap between each edge and any adjacent contact."""
    _require_single(T, "min_filtration")
    u, v, t = T.arrays()
    best = np.full(T.n_edges, INF)
    for idx in _incidence(T.n_vertices, u, v):
        if idx.size < 2:
            continue
        order = np.argsort(t[idx], kind="stable")
        ts = t[idx][order]
        gaps = np.diff(ts)
        near = np.full(ts.size, INF)
        near[1:] = gaps
        near[:-1] = np.minimum(near[:-1], gaps)
        sel = idx[order]
        best[sel] = np.minimum(best[sel], near)
    return FilteredGraph.from_values(T.n_vertices, _pairs(T), best)


def avg_filtration(T: TemporalGraph) -> FilteredGraph:
    """Mean timestamp gap between each edge and all of its adjacent contacts.

    Follows the incident-edge-pair sweep: at every vertex, each pair of
    incident edges adds ``|t - t'|`` to both running sums, so the total work
    is ``O(|E| * d_max)``. The sum of an edge ``uv`` is divided by its
    neighbourhood size ``td_u + td_v - 2``.
    """
    _require_single(T, "avg_filtration")
    u, v, t = T.arrays()
    sums = np.zeros(T.n_edges)
    for idx in _incidence(T.n_vertices, u, v):
        d = idx.size
        if d < 2:
            continue
        tv = t[idx]
        if d <= _SWEEP_BLOCK:
            sums[idx] += np.abs(tv[:, None] - tv[None, :]).sum(axis=1)
        else:
            for lo in range(0, d, _SWEEP_BLOCK):
                blk = tv[lo:lo + _SWEEP_BLOCK]
                sums[idx[lo:lo + _SWEEP_BLOCK]] += np.abs(blk[:, None] - tv[None, :]).sum(axis=1)
    td = temporal_degrees(T)
    nbhd = td[u] + td[v] - 2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(nbhd > 0, sums / np.maximum(nbhd, 1), INF)
    return FilteredGraph.from_values(T.n_vertices, _pairs(T), f)


def _sum_abs_to_sorted(queries: np.ndarray, pool_sorted: np.ndarray, prefix: np.ndarray) -> np.ndarray:
    """``sum_j |q - pool_j|`` for every query, given the pool sorted with prefix sums."""
    k = np.searchsorted(pool_sorted, queries, side="left")
    total = prefix[-1]
    n = pool_sorted.size
    return queries * k - prefix[k] + (total - prefix[k]) - queries * (n - k)


def avg_filtration_multi(T: TemporalGraph) -> FilteredGraph:
    """Average filtration for multi-labeled contact sequences.

    For an aggregate edge with label set ``tau(e)`` the value is the sum of
    ``|t - t'|`` over ``t in tau(e)`` and every adjacent contact ``t'``,
    divided by the number of adjacent contacts. Contacts on the same vertex
    pair are not adjacent.
    """
    G = aggregate(T)
    u, v, t = T.arrays()
    m = T.n_edges
    per_contact = np.zeros(m)
    for idx in _incidence(T.n_vertices, u, v):
        if idx.size < 2:
            continue
        pool = np.sort(t[idx], kind="stable")
        prefix = np.concatenate([[0.0], np.cumsum(pool)])
        per_contact[idx] += _sum_abs_to_sorted(t[idx], pool, prefix)

    pairs = list(G.labels)
    counts = np.array([len(G.labels[p]) for p in pairs], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)])
    sums = np.zeros(len(pairs))
    for k in range(len(pairs)):
        lo, hi = starts[k], starts[k + 1]
        tk = t[lo:hi]  # canonical order keeps each pair contiguous and time-sorted
        within = 0.0
        if hi - lo > 1:
            within = float(np.abs(tk[:, None] - tk[None, :]).sum())
        # the pair's own contacts appear in the pools of both endpoints
        sums[k] = per_contact[lo:hi].sum() - 2.0 * within

    td = temporal_degrees(T)
    pu = np.array([p[0] for p in pairs], dtype=np.int64)
    pv = np.array([p[1] for p in pairs], dtype=np.int64)
    nbhd = td[pu] + td[pv] - 2 * counts if pairs else np.zeros(0, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(nbhd > 0, sums / np.maximum(nbhd, 1), INF)
    return FilteredGraph.from_values(T.n_vertices, pairs, f)


# --------------------------------------------------------------------------
# static filtrations on the aggregate graph

def _nx_graph(G: AggregateGraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(G.n_vertices))
    g.add_edges_from(G.labels)
    return g


def static_filtration(G: AggregateGraph, kind: str) -> FilteredGraph:
    kind = kind.replace("_", "-")
    g = _nx_graph(G)
    if kind == "add-max-deg":
        score = dict(g.degree())
        scale = 1.0
    elif kind == "add-core-num":
        score = nx.core_number(g)
        scale = 1.0
    elif kind == "add-triangle":
        score = nx.triangles(g)
        scale = 0.5
    else:
        raise ValueError(f"unknown static filtration {kind!r}")
    pairs = G.edges
    return FilteredGraph.from_values(
        G.n_vertices, pairs, [scale * max(score[a], score[b]) for a, b in pairs]
    )


def filtrate(T: TemporalGraph, method: str) -> FilteredGraph:
    method = method.replace("_", "-")
    if method == "min":
        return min_filtration(T)
    if method == "avg":
        return avg_filtration(T)
    if method == "avg-mlt":
        return avg_filtration_multi(T)
    if method in STATIC_METHODS:
        return static_filtration(aggregate(T), method)
    raise ValueError(f"unknown filtration method {method!r}; expected one of {METHODS}")


# --------------------------------------------------------------------------
# IO: ``u v f`` lines

def format_filtered_graph(G: FilteredGraph) -> str:
    lines = [f"# n_vertices {G.n_vertices}"]
    lines += [f"{u} {v} {fmt_float(f)}" for u, v, f in G.edges]
    return "\n".join(lines) + "\n"


def write_filtered_graph(G: FilteredGraph, path) -> None:
    atomic_write_text(Path(path), format_filtered_graph(G))


def read_filtered_graph(path) -> FilteredGraph:
    n = None
    edges = []
    with open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].split()
                if body[:1] == ["n_vertices"] and len(body) == 2:
                    n = int(body[1])
                continue
            parts = s.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'u v f'")
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if n is None:
        n = 1 + max((max(a, b) for a, b, _ in edges), default=-1)
    return FilteredGraph(n, tuple(edges))
