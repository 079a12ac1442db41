"""Temporal graphs, their aggregate graphs, contact-file IO and basic statistics."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._io import atomic_write_text, open_text


class ContactFileError(ValueError):
    """Raised for malformed contact-sequence input."""


COLUMN_ORDERS = ("tuv", "uvt")


@dataclass(frozen=True)
class TemporalEdge:
    u: int
    v: int
    t: float

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError(f"self loop on vertex {self.u}")
        if self.u > self.v:
            a, b = self.v, self.u
            object.__setattr__(self, "u", a)
            object.__setattr__(self, "v", b)
        object.__setattr__(self, "t", float(self.t))
        if not math.isfinite(self.t):
            raise ValueError(f"non-finite timestamp {self.t}")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)


class TemporalGraph:
    """Undirected contact sequence on vertices ``0..n_vertices-1``.

    Edges are canonicalised to ``u < v`` and kept sorted by ``(u, v, t)``.
    Duplicate triples are retained. Instances are treated as immutable.
    """

    def __init__(
        self,
        n_vertices: int,
        edges: Iterable[TemporalEdge | tuple],
        names: Sequence[str] | None = None,
    ):
        es = [e if isinstance(e, TemporalEdge) else TemporalEdge(*e) for e in edges]
        for e in es:
            if not (0 <= e.u < n_vertices and 0 <= e.v < n_vertices):
                raise ValueError(f"edge {e} out of range for {n_vertices} vertices")
        es.sort(key=lambda e: (e.u, e.v, e.t))
        self.n_vertices = int(n_vertices)
        self.edges: tuple[TemporalEdge, ...] = tuple(es)
        if names is None:
            names = [str(i) for i in range(n_vertices)]
        if len(names) != n_vertices:
            raise ValueError("names must have one entry per vertex")
        self.names: tuple[str, ...] = tuple(names)
        pairs = [e.pair for e in es]
        self.single_labeled = len(set(pairs)) == len(pairs)

    # array views -----------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(u, v, t)`` numpy arrays in canonical order."""
        u = np.fromiter((e.u for e in self.edges), dtype=np.int64, count=self.n_edges)
        v = np.fromiter((e.v for e in self.edges), dtype=np.int64, count=self.n_edges)
        t = np.fromiter((e.t for e in self.edges), dtype=np.float64, count=self.n_edges)
        return u, v, t

    @classmethod
    def from_arrays(cls, n_vertices, u, v, t, names=None) -> "TemporalGraph":
        return cls(n_vertices, [TemporalEdge(int(a), int(b), float(c)) for a, b, c in zip(u, v, t)], names)

    def with_times(self, times: Sequence[float]) -> "TemporalGraph":
        """Copy with timestamps replaced edge-by-edge (canonical order)."""
        if len(times) != self.n_edges:
            raise ValueError("one timestamp per temporal edge required")
        return TemporalGraph(
            self.n_vertices,
            [TemporalEdge(e.u, e.v, t) for e, t in zip(self.edges, times)],
            self.names,
        )

    def content_key(self) -> tuple:
        return (self.n_vertices, tuple((e.u, e.v, e.t) for e in self.edges))

    def __eq__(self, other):
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        return self.content_key() == other.content_key()

    def __hash__(self):
        return hash(self.content_key())

    def __repr__(self):
        kind = "single" if self.single_labeled else "multi"
        return f"TemporalGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges}, {kind}-labeled)"


@dataclass(frozen=True)
class AggregateGraph:
    n_vertices: int
    labels: dict[tuple[int, int], tuple[float, ...]]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.labels)

    def multiplicity(self, u: int, v: int) -> int:
        return len(self.labels[(min(u, v), max(u, v))])

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)


def aggregate(T: TemporalGraph) -> AggregateGraph:
    labels: dict[tuple[int, int], list[float]] = defaultdict(list)
    for e in T.edges:
        labels[e.pair].append(e.t)
    adj: list[set[int]] = [set() for _ in range(T.n_vertices)]
    for u, v in labels:
        adj[u].add(v)
        adj[v].add(u)
    return AggregateGraph(
        T.n_vertices,
        {p: tuple(sorted(ts)) for p, ts in sorted(labels.items())},
        tuple(tuple(sorted(a)) for a in adj),
    )


def from_aggregate(n_vertices: int, labels: dict, names=None) -> TemporalGraph:
    """Expand a ``pair -> label set`` mapping back into a temporal graph."""
    edges = [TemporalEdge(u, v, t) for (u, v), ts in labels.items() for t in ts]
    return TemporalGraph(n_vertices, edges, names)


def temporal_degrees(T: TemporalGraph) -> np.ndarray:
    if T.n_edges == 0:
        return np.zeros(T.n_vertices, dtype=np.int64)
    u, v, _ = T.arrays()
    return np.bincount(np.concatenate([u, v]), minlength=T.n_vertices)


def temporal_degree(T: TemporalGraph, v: int) -> int:
    if not 0 <= v < T.n_vertices:
        raise IndexError(f"vertex {v} out of range 0..{T.n_vertices - 1}")
    return int(temporal_degrees(T)[v])


@dataclass(frozen=True)
class GraphStats:
    """Summary counts.

    ``avg_degree``/``max_degree`` are aggregate-graph degrees (the columns
    reported for the SocioPatterns datasets); the temporal-degree versions
    count every contact.
    """

    n_vertices: int
    n_static_edges: int
    n_temporal_edges: int
    avg_labels_per_edge: float
    max_labels_per_edge: int
    avg_degree: float
    max_degree: int
    avg_temporal_degree: float
    max_temporal_degree: int

    def as_rows(self) -> list[tuple[str, str]]:
        return [
            ("|V|", str(self.n_vertices)),
            ("|E_s|", str(self.n_static_edges)),
            ("|E|", str(self.n_temporal_edges)),
            ("E_avg", f"{self.avg_labels_per_edge:.2f}"),
            ("E_max", str(self.max_labels_per_edge)),
            ("d_avg", f"{self.avg_degree:.2f}"),
            ("d_max", str(self.max_degree)),
            ("td_avg", f"{self.avg_temporal_degree:.2f}"),
            ("td_max", str(self.max_temporal_degree)),
        ]


def stats(T: TemporalGraph) -> GraphStats:
    G = aggregate(T)
    counts = np.array([len(ts) for ts in G.labels.values()], dtype=np.int64)
    deg = G.degrees()
    td = temporal_degrees(T)
    n = T.n_vertices
    return GraphStats(
        n_vertices=n,
        n_static_edges=len(G.labels),
        n_temporal_edges=T.n_edges,
        avg_labels_per_edge=float(counts.mean()) if counts.size else 0.0,
        max_labels_per_edge=int(counts.max()) if counts.size else 0,
        avg_degree=float(deg.mean()) if n else 0.0,
        max_degree=int(deg.max()) if n else 0,
        avg_temporal_degree=float(td.mean()) if n else 0.0,
        max_temporal_degree=int(td.max()) if n else 0,
    )


# --------------------------------------------------------------------------
# contact files

def parse_contact_lines(lines: Iterable[str], columns: str = "tuv") -> TemporalGraph:
    if columns not in COLUMN_ORDERS:
        raise ValueError(f"columns must be one of {COLUMN_ORDERS}")
    ids: dict[str, int] = {}
    raw: list[tuple[int, int, float]] = []
    seen_data = False

    def vid(name):
        if name not in ids:
            ids[name] = len(ids)
        return ids[name]

    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            # header written by write_contact_sequence pins the id mapping
            body = s[1:].split()
            if body[:1] == ["vertices"] and not seen_data:
                for name in body[1:]:
                    vid(name)
            continue
        seen_data = True
        fields = s.split()
        if len(fields) < 3:
            raise ContactFileError(f"line {lineno}: expected at least 3 fields, got {len(fields)}")
        if columns == "tuv":
            ts, a, b = fields[0], fields[1], fields[2]
        else:
            a, b, ts = fields[0], fields[1], fields[2]
        try:
            t = float(ts)
        except ValueError:
            raise ContactFileError(f"line {lineno}: timestamp {ts!r} is not a number") from None
        if not math.isfinite(t):
            raise ContactFileError(f"line {lineno}: non-finite timestamp {ts!r}")
        if a == b:
            raise ContactFileError(f"line {lineno}: self loop on vertex {a!r}")
        raw.append((vid(a), vid(b), t))
    if not raw and not ids:
        raise ContactFileError("empty contact file")
    names = sorted(ids, key=ids.__getitem__)
    return TemporalGraph(len(names), [TemporalEdge(u, v, t) for u, v, t in raw], names)


def read_contact_sequence(path, columns: str = "tuv") -> TemporalGraph:
    """Read a whitespace-delimited contact list.

    Columns are ``t u v`` (``columns="tuv"``) or ``u v t``; extra trailing
    fields are ignored and ``#`` lines are comments. Vertex names are mapped
    to dense ids in order of first appearance.
    """
    with open_text(path) as fh:
        return parse_contact_lines(fh, columns)


def _fmt_time(t: float) -> str:
    return str(int(t)) if t.is_integer() and abs(t) < 2**53 else repr(t)


def format_contact_sequence(T: TemporalGraph) -> str:
    out = [f"# vertices {' '.join(T.names)}"]
    for e in T.edges:
        out.append(f"{_fmt_time(e.t)} {T.names[e.u]} {T.names[e.v]}")
    return "\n".join(out) + "\n"


def write_contact_sequence(T: TemporalGraph, path) -> None:
    """Write ``t u v`` lines in canonical order, atomically."""
    atomic_write_text(Path(path), format_contact_sequence(T))
