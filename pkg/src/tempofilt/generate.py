"""Synthetic temporal graphs: uniform random single-labeled graphs and a
degree-heterogeneous contact model with tunable (dis)assortative mixing."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .nullmodels import make_rng
from .tgraph import TemporalEdge, TemporalGraph

log = logging.getLogger(__name__)

MIXING = ("assortative", "disassortative")


@dataclass(frozen=True)
class RandomGraphSpec:
    n_vertices: int
    sparsity: float
    t_range: tuple[float, float] = (0.0, 100.0)
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not 0.0 < self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in (0, 1]")
        lo, hi = self.t_range
        if not hi > lo:
            raise ValueError("t_range must be a non-empty interval (lo, hi]")


def n_pairs_for(n_vertices: int, sparsity: float) -> int:
    total = n_vertices * (n_vertices - 1) // 2
    # tolerate representation error such as 0.05 * 4950 = 247.49999...
    return int(math.floor(sparsity * total + 1e-9))


def random_temporal_graph(spec: RandomGraphSpec) -> TemporalGraph:
    """``floor(sparsity * C(n,2))`` distinct random pairs, one timestamp each in ``(lo, hi]``."""
    n = spec.n_vertices
    m = n_pairs_for(n, spec.sparsity)
    if m < 1:
        raise ValueError("sparsity * C(n, 2) must be at least 1")
    rng = make_rng(spec.seed, spec.stream)
    total = n * (n - 1) // 2
    flat = np.sort(rng.choice(total, size=m, replace=False))
    iu, iv = np.triu_indices(n, k=1)
    lo, hi = spec.t_range
    times = hi - rng.uniform(0.0, hi - lo, size=m)
    return TemporalGraph(n, [TemporalEdge(int(iu[k]), int(iv[k]), float(t)) for k, t in zip(flat, times)])


@dataclass(frozen=True)
class ContactModelSpec:
    n_vertices: int
    n_temporal_edges: int
    mixing: str = "assortative"
    mixing_strength: float = 0.0
    seed: int = 0
    stream: int = 0
    n_static_edges: int | None = None
    t_max: float = 1000.0
    exponent: float = 2.5
    candidates: int = 8

    def __post_init__(self):
        if self.mixing not in MIXING:
            raise ValueError(f"mixing must be one of {MIXING}")
        if not 0.0 <= self.mixing_strength <= 1.0:
            raise ValueError("mixing_strength must lie in [0, 1]")
        n_static = self.static_edges
        if n_static > self.n_temporal_edges:
            raise ValueError("n_static_edges cannot exceed n_temporal_edges")
        if n_static > self.n_vertices * (self.n_vertices - 1) // 2:
            raise ValueError("more static edges than vertex pairs")

    @property
    def static_edges(self) -> int:
        return self.n_temporal_edges if self.n_static_edges is None else self.n_static_edges


def _pick_partner(u, pool_w, weights, rng, spec, forbid) -> int | None:
    """Draw a partner for ``u``; with probability ``mixing_strength`` the
    closest (assortative) or farthest (disassortative) candidate in log-weight
    is taken instead of the first draw."""
    p = pool_w / pool_w.sum()
    for _ in range(20):
        cand = rng.choice(p.size, size=spec.candidates, p=p)
        cand = [int(c) for c in cand if c != u and (min(u, c), max(u, c)) not in forbid]
        if cand:
            break
    else:
        return None
    if rng.random() < spec.mixing_strength:
        gap = [abs(math.log(weights[c]) - math.log(weights[u])) for c in cand]
        k = int(np.argmin(gap)) if spec.mixing == "assortative" else int(np.argmax(gap))
        return cand[k]
    return cand[0]


def _contact_attempt(spec: ContactModelSpec, rng: np.random.Generator) -> TemporalGraph:
    n = spec.n_vertices
    weights = (1.0 - rng.random(n)) ** (-1.0 / (spec.exponent - 1.0))
    weights = np.minimum(weights, n)
    pairs: set[tuple[int, int]] = set()
    target = spec.static_edges

    # grow a spanning tree first so that the aggregate is connected
    order = rng.permutation(n)
    if target >= n - 1:
        for k in range(1, n):
            u = int(order[k])
            placed = order[:k]
            pool = np.zeros(n)
            pool[placed] = weights[placed]
            v = _pick_partner(u, pool, weights, rng, spec, pairs)
            if v is not None:
                pairs.add((min(u, v), max(u, v)))

    tries = 0
    while len(pairs) < target:
        tries += 1
        if tries > 200 * target + 1000:
            raise RuntimeError("could not place the requested number of static edges")
        u = int(rng.choice(n, p=weights / weights.sum()))
        v = _pick_partner(u, weights, weights, rng, spec, pairs)
        if v is not None:
            pairs.add((min(u, v), max(u, v)))

    plist = sorted(pairs)
    labels = {p: 1 for p in plist}
    extra = spec.n_temporal_edges - len(plist)
    if extra > 0:
        w = np.array([weights[a] * weights[b] for a, b in plist])
        for k in rng.choice(len(plist), size=extra, p=w / w.sum()):
            labels[plist[int(k)]] += 1
    edges = []
    for (a, b), c in labels.items():
        for t in spec.t_max - rng.uniform(0.0, spec.t_max, size=c):
            edges.append(TemporalEdge(a, b, float(t)))
    return TemporalGraph(n, edges)


def is_connected(T: TemporalGraph) -> bool:
    parent = list(range(T.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in T.edges:
        parent[find(e.u)] = find(e.v)
    return len({find(x) for x in range(T.n_vertices)}) <= 1


def synthetic_contact_graph(spec: ContactModelSpec, max_attempts: int = 20) -> TemporalGraph:
    rng = make_rng(spec.seed, spec.stream)
    last = None
    for _ in range(max_attempts):
        last = _contact_attempt(spec, rng)
        if is_connected(last):
            return last
    log.warning("synthetic contact graph still disconnected after %d attempts", max_attempts)
    return last


def degree_assortativity(T: TemporalGraph) -> float:
    """Pearson correlation of aggregate degrees across edge endpoints."""
    pairs = sorted({e.pair for e in T.edges})
    deg = np.zeros(T.n_vertices)
    for a, b in pairs:
        deg[a] += 1
        deg[b] += 1
    x = np.array([deg[a] for a, b in pairs] + [deg[b] for a, b in pairs])
    y = np.array([deg[b] for a, b in pairs] + [deg[a] for a, b in pairs])
    if x.std() == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])
