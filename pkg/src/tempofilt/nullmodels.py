"""Randomised reference models used to populate classes: TP, EWLSS, RE, CM."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .tgraph import TemporalGraph, aggregate, from_aggregate

MODELS = ("tp", "ewlss", "re", "cm")


class NullModelError(ValueError):
    pass


def make_rng(seed: int, stream: int = 0, *substreams: int) -> np.random.Generator:
    """PCG64 generator keyed by ``(seed, stream, ...)``; identical across platforms."""
    key = tuple(int(s) & (2**64 - 1) for s in (stream, *substreams))
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, tuple):
        return make_rng(*seed)
    return make_rng(seed)


@dataclass(frozen=True)
class NullModelSpec:
    model: str
    fraction: float = 0.0
    epsilon: float = 1.0
    steps: int = 1
    seed: int = 0
    stream: int = 0
    passes: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    def apply(self, T: TemporalGraph) -> TemporalGraph:
        rng = make_rng(self.seed, self.stream)
        if self.model == "tp":
            return tp_perturb(T, self.fraction, self.epsilon, rng)
        if self.model == "ewlss":
            return ewlss_shuffle(T, self.steps, rng)
        if self.model == "re":
            if self.passes is not None:
                return re_shuffle(T, rng, passes=self.passes)
            return re_shuffle(T, rng, steps=self.steps)
        return cm_rewire(T, rng)


# --------------------------------------------------------------------------
# TP

def tp_perturb(T: TemporalGraph, fraction: float, epsilon: float, seed=0) -> TemporalGraph:
    """Shift the timestamps of a random ``ceil(fraction*|E|)`` subset by ``0 < |d| < epsilon``."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = _as_rng(seed)
    m = T.n_edges
    k = min(m, math.ceil(fraction * m - 1e-12))
    if k == 0:
        return T
    chosen = rng.choice(m, size=k, replace=False)
    times = np.array([e.t for e in T.edges])
    for i in np.sort(chosen):
        d = 0.0
        while d == 0.0 or abs(d) >= epsilon:
            d = rng.uniform(-epsilon, epsilon)
        times[i] += d
    return T.with_times(times)


# --------------------------------------------------------------------------
# EWLSS

def ewlss_shuffle(T: TemporalGraph, steps: int, seed=0) -> TemporalGraph:
    """Swap the whole label sets of random aggregate-edge pairs with equal label counts."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps == 0:
        return T
    rng = _as_rng(seed)
    labels = dict(aggregate(T).labels)
    by_count: dict[int, list] = defaultdict(list)
    for p, ts in labels.items():
        by_count[len(ts)].append(p)
    classes = [(c, ps) for c, ps in sorted(by_count.items()) if len(ps) >= 2]
    if not classes:
        raise NullModelError("EWLSS needs two aggregate edges with the same number of time labels")
    weights = np.array([len(ps) * (len(ps) - 1) / 2 for _, ps in classes], dtype=float)
    weights /= weights.sum()
    for _ in range(steps):
        _, ps = classes[rng.choice(len(classes), p=weights)]
        i, j = rng.choice(len(ps), size=2, replace=False)
        a, b = ps[i], ps[j]
        labels[a], labels[b] = labels[b], labels[a]
    return from_aggregate(T.n_vertices, labels, T.names)


# --------------------------------------------------------------------------
# RE

def _re_exchange(edges: list, present: set, i: int, j: int, cross: bool) -> bool:
    """Try one RE exchange between aggregate edges ``i`` and ``j`` in place.

    ``edges`` holds ``[u, v, labels]`` entries. With ``cross`` the pair becomes
    ``(u, v')``, ``(u', v)``; otherwise ``(u, u')``, ``(v, v')``. Each new edge
    keeps the labels of the edge whose first endpoint it inherits. Returns
    False (and changes nothing) if a self loop or parallel edge would appear.
    """
    u, v, lab1 = edges[i]
    x, y, lab2 = edges[j]
    a, b = ((u, y), (x, v)) if cross else ((u, x), (v, y))
    if a[0] == a[1] or b[0] == b[1]:
        return False
    a = (min(a), max(a))
    b = (min(b), max(b))
    if a == b:
        return False
    old = {(min(u, v), max(u, v)), (min(x, y), max(x, y))}
    if (a in present and a not in old) or (b in present and b not in old):
        return False
    present.difference_update(old)
    present.update((a, b))
    edges[i] = [a[0], a[1], lab1]
    edges[j] = [b[0], b[1], lab2]
    return True


def re_shuffle(T: TemporalGraph, seed=0, passes: int = 1, steps: int | None = None) -> TemporalGraph:
    """Randomised-edges shuffle.

    Iterates over the aggregate edges in canonical order (cyclically), pairing
    each with a uniformly drawn other edge and applying the 50/50 endpoint
    exchange. Rejected exchanges are skipped but still consume a step. By
    default ``passes`` full passes are made (``passes * |E_s|`` steps);
    ``steps`` overrides that with an explicit number of exchange attempts,
    in which case the cycle starts at a random edge.
    """
    rng = _as_rng(seed)
    labels = aggregate(T).labels
    edges = [[p[0], p[1], ts] for p, ts in labels.items()]
    m = len(edges)
    explicit = steps
    if steps is None:
        steps = passes * m
    if m < 2 or steps == 0:
        return T
    present = set(labels)
    start = 0 if explicit is None else int(rng.integers(m))
    for s in range(steps):
        i = (start + s) % m
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        cross = bool(rng.random() < 0.5)
        _re_exchange(edges, present, i, j, cross)
    return from_aggregate(T.n_vertices, {(u, v): ts for u, v, ts in edges}, T.names)


# --------------------------------------------------------------------------
# CM

def configuration_pairs(degrees, rng: np.random.Generator, max_retries: int = 100) -> list[tuple[int, int]]:
    """Simple graph with the given degree sequence by stub matching.

    Conflicting stub pairs (self loops, repeats) are resampled by swapping
    partners with random other pairs; after too many failed swaps the whole
    matching restarts, at most ``max_retries`` times.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    stubs = np.repeat(np.arange(degrees.size), degrees)
    if stubs.size % 2:
        raise NullModelError("degree sequence has odd sum")
    if stubs.size == 0:
        return []
    npairs = stubs.size // 2
    for _ in range(max_retries):
        perm = rng.permutation(stubs)
        a, b = perm[0::2].copy(), perm[1::2].copy()
        budget = 50 * npairs + 100
        while budget > 0:
            seen: dict[tuple[int, int], int] = {}
            bad = []
            for k in range(npairs):
                key = (min(a[k], b[k]), max(a[k], b[k]))
                if a[k] == b[k] or key in seen:
                    bad.append(k)
                else:
                    seen[key] = k
            if not bad:
                return sorted((int(min(x, y)), int(max(x, y))) for x, y in zip(a, b))
            for k in bad:
                budget -= 1
                other = int(rng.integers(npairs))
                if other == k:
                    continue
                # swap partners: (a_k, b_k), (a_o, b_o) -> (a_k, b_o), (a_o, b_k)
                b[k], b[other] = b[other], b[k]
        # fall through: restart with a fresh permutation
    raise NullModelError(f"configuration model stub matching failed after {max_retries} retries")


def cm_rewire(T: TemporalGraph, seed=0, max_retries: int = 100) -> TemporalGraph:
    """Configuration-model rewiring followed by label reassignment and a global time shuffle."""
    rng = _as_rng(seed)
    G = aggregate(T)
    new_pairs = configuration_pairs(G.degrees(), rng, max_retries)
    label_sets = list(G.labels.values())
    order = rng.permutation(len(label_sets))
    assigned = [label_sets[k] for k in order]
    flat = np.array([t for ts in assigned for t in ts], dtype=float)
    flat = flat[rng.permutation(flat.size)]
    out = {}
    pos = 0
    for p, ts in zip(new_pairs, assigned):
        out[p] = tuple(flat[pos:pos + len(ts)])
        pos += len(ts)
    return from_aggregate(T.n_vertices, out, T.names)


def apply_model(T: TemporalGraph, model: str, rng, *, fraction=0.0, epsilon=1.0, steps=1) -> TemporalGraph:
    model = model.lower()
    if model == "tp":
        return tp_perturb(T, fraction, epsilon, rng)
    if model in ("ewlss", "ewls"):
        return ewlss_shuffle(T, steps, rng)
    if model == "re":
        return re_shuffle(T, rng, steps=steps)
    if model == "cm":
        return cm_rewire(T, rng)
    raise ValueError(f"unknown null model {model!r}")
