"""Persistence Scale Space kernel, filtered Weisfeiler-Lehman graph filtration
kernel, and Gram-matrix assembly/IO."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._io import atomic_write_text, open_text
from .filtration import FilteredGraph
from .persistence import PersistenceDiagram, threshold_diagram

INF = math.inf


@dataclass(frozen=True)
class KernelParams:
    sigma: float = 1.0
    gamma: float = 1.0
    wl_depth: int = 3
    n_levels: int = 10
    degree_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    essential_cap: float = 1.1
    threshold: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0 or self.gamma <= 0:
            raise ValueError("sigma and gamma must be positive")
        if self.wl_depth < 0 or self.n_levels < 1:
            raise ValueError("wl_depth >= 0 and n_levels >= 1 required")
        if len(self.degree_weights) != 3 or min(self.degree_weights) < 0:
            raise ValueError("degree_weights must be three non-negative numbers")


@dataclass
class GramMatrix:
    ids: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise ValueError(f"Gram matrix shape {self.values.shape} does not match {n} ids")

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values - self.values.T) <= tol))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.values + self.values.T) / 2).min())


# --------------------------------------------------------------------------
# PSS

def pss_kernel(D: np.ndarray, E: np.ndarray, sigma: float) -> float:
    """Persistence Scale Space kernel between two finite (birth, death) arrays.

    ``1/(8 pi sigma^2) * sum_{p,q} exp(-|p-q|^2/(8 sigma)) - exp(-|p-qbar|^2/(8 sigma))``
    with ``qbar`` the reflection of ``q`` in the diagonal.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    D = np.asarray(D, dtype=float).reshape(-1, 2)
    E = np.asarray(E, dtype=float).reshape(-1, 2)
    if not (np.all(np.isfinite(D)) and np.all(np.isfinite(E))):
        raise ValueError("PSS kernel needs finite points; substitute essential points first")
    if D.shape[0] == 0 or E.shape[0] == 0:
        return 0.0
    d2 = ((D[:, None, :] - E[None, :, :]) ** 2).sum(-1)
    d2m = ((D[:, None, :] - E[None, :, ::-1]) ** 2).sum(-1)
    s = np.exp(-d2 / (8 * sigma)) - np.exp(-d2m / (8 * sigma))
    return float(s.sum() / (8 * math.pi * sigma**2))


def essential_value(diagrams: Sequence[PersistenceDiagram], factor: float = 1.1) -> float:
    """Death assigned to essential classes: ``factor`` times the dataset-wide maximum value."""
    vmax = max((D.max_value for D in diagrams), default=0.0)
    cap = factor * vmax
    return cap if cap > 0 else 1.0


def prepare_diagrams(
    diagrams: Sequence[PersistenceDiagram],
    essential_cap: float = 1.1,
    threshold: float = 0.0,
    degrees: Sequence[int] = (0, 1, 2),
) -> list[list[np.ndarray]]:
    """Threshold, substitute essential deaths, and split by degree."""
    cap = essential_value(diagrams, essential_cap)
    out = []
    for D in diagrams:
        D = threshold_diagram(D, threshold)
        per = []
        for d in degrees:
            pts = D.degree(d).copy()
            if pts.size:
                pts[:, 1] = np.where(np.isinf(pts[:, 1]), np.maximum(cap, pts[:, 0]), pts[:, 1])
            per.append(pts)
        out.append(per)
    return out


def _pss_block(A: list[np.ndarray], B: list[np.ndarray], sigma: float, symmetric: bool) -> np.ndarray:
    K = np.zeros((len(A), len(B)))
    for i, a in enumerate(A):
        for j in range(i if symmetric else 0, len(B)):
            K[i, j] = pss_kernel(a, B[j], sigma)
            if symmetric:
                K[j, i] = K[i, j]
    return K


def pss_gram(
    prepared: list[list[np.ndarray]],
    sigma: float = 1.0,
    weights: Sequence[float] = (1.0, 1.0, 1.0),
    ids: Sequence[str] | None = None,
) -> GramMatrix:
    """Weighted sum over degrees of per-degree PSS Gram matrices."""
    n = len(prepared)
    if ids is None:
        ids = [str(i) for i in range(n)]
    if len(ids) != n:
        raise ValueError("ids and diagrams differ in length")
    ndeg = {len(p) for p in prepared}
    if len(ndeg) > 1:
        raise ValueError("every graph needs the same number of degree slices")
    K = np.zeros((n, n))
    for d, w in enumerate(weights):
        if w == 0 or n == 0 or d >= len(prepared[0]):
            continue
        K += w * _pss_block([p[d] for p in prepared], [p[d] for p in prepared], sigma, True)
    return GramMatrix(list(ids), K)


# --------------------------------------------------------------------------
# filtered Weisfeiler-Lehman

def _relabel(prev: str, neigh: list[str]) -> str:
    h = hashlib.blake2b(digest_size=12)
    h.update(prev.encode())
    h.update(b"|")
    h.update(",".join(sorted(neigh)).encode())
    return h.hexdigest()


def superlevel_weights(G: FilteredGraph, w_max: float | None = None) -> FilteredGraph:
    """Turn a sublevel filtration into superlevel weights ``w_max - w``.

    ``inf`` edges are dropped; they never appear at any level.
    """
    finite = [(u, v, f) for u, v, f in G.edges if f != INF]
    if w_max is None:
        w_max = max((f for _, _, f in finite), default=0.0)
    return FilteredGraph(G.n_vertices, tuple((u, v, max(0.0, w_max - f)) for u, v, f in finite))


def quantile_thresholds(values: np.ndarray, n_levels: int = 10) -> np.ndarray:
    """Descending thresholds: ``n_levels`` equidistant quantiles plus the full level 0."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    alphas = [0.0]
    if values.size:
        qs = np.quantile(values, np.arange(1, n_levels + 1) / n_levels)
        alphas += [float(q) for q in qs]
    return np.array(sorted(set(alphas), reverse=True))


def wl_filtration_histograms(G: FilteredGraph, thresholds: Sequence[float], h: int) -> dict[str, np.ndarray]:
    """Per-feature counts of WL labels at each filtration level.

    Level ``i`` keeps the edges with weight ``>= thresholds[i]`` (``inf`` edges
    never); all vertices are present at every level. Each level runs ``h``
    refinement rounds from a uniform initial label and every (round, label)
    occurrence is one count of that feature.
    """
    A = list(thresholds)
    k = len(A)
    hist: dict[str, np.ndarray] = {}
    n = G.n_vertices
    for i, alpha in enumerate(A):
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v, f in G.edges:
            if f != INF and f >= alpha:
                adj[u].append(v)
                adj[v].append(u)
        labels = ["0"] * n
        for r in range(h + 1):
            if r > 0:
                labels = [_relabel(labels[x], [labels[y] for y in adj[x]]) for x in range(n)]
            for lab in labels:
                key = f"{r}:{lab}"
                arr = hist.get(key)
                if arr is None:
                    arr = hist[key] = np.zeros(k)
                arr[i] += 1
    return hist


def wasserstein_1d(h1, h2, positions) -> float:
    """1-Wasserstein distance between two histograms on the real line.

    Both histograms are L1-normalised first; the distance is the integral of
    the absolute CDF difference over the sorted support.
    """
    a = np.asarray(h1, dtype=float)
    b = np.asarray(h2, dtype=float)
    x = np.asarray(positions, dtype=float)
    if not (a.shape == b.shape == x.shape):
        raise ValueError("histograms and positions must have the same length")
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        raise ValueError("histogram with zero mass cannot be normalised")
    order = np.argsort(x, kind="stable")
    a, b, x = a[order] / sa, b[order] / sb, x[order]
    if x.size < 2:
        return 0.0
    cdf = np.cumsum(a - b)[:-1]
    return float(np.sum(np.abs(cdf) * np.diff(x)))


def _hist_table(H: dict[str, np.ndarray]) -> tuple[dict[str, int], np.ndarray]:
    keys = sorted(H)
    M = np.array([H[k] for k in keys], dtype=float).reshape(len(keys), -1)
    return {k: i for i, k in enumerate(keys)}, M


def _kernel_tables(T1, T2, thresholds, gamma: float) -> float:
    (idx1, M1), (idx2, M2) = T1, T2
    if len(idx2) < len(idx1):
        (idx1, M1), (idx2, M2) = (idx2, M2), (idx1, M1)
    shared = sorted(f for f in idx1 if f in idx2)
    if not shared:
        return 0.0
    A = M1[[idx1[f] for f in shared]]
    B = M2[[idx2[f] for f in shared]]
    x = np.asarray(thresholds, dtype=float)
    order = np.argsort(x, kind="stable")
    x = x[order]
    ma, mb = A.sum(1), B.sum(1)
    if np.any(ma <= 0) or np.any(mb <= 0):
        raise ValueError("histogram with zero mass cannot be normalised")
    if x.size < 2:
        w = np.zeros(len(shared))
    else:
        # W1 per feature from the CDF difference, as in wasserstein_1d
        cdf = np.cumsum(A[:, order] / ma[:, None] - B[:, order] / mb[:, None], axis=1)[:, :-1]
        w = np.abs(cdf) @ np.diff(x)
    return float(np.sum(np.exp(-gamma * w) * ma * mb))


def filtration_kernel(H1: dict[str, np.ndarray], H2: dict[str, np.ndarray], thresholds, gamma: float) -> float:
    """Sum over shared features of ``exp(-gamma W) * |phi(G)|_1 * |phi(G')|_1``.

    Features present in only one graph contribute nothing.
    """
    return _kernel_tables(_hist_table(H1), _hist_table(H2), thresholds, gamma)


def filtration_gram(
    graphs: Sequence[FilteredGraph],
    params: KernelParams = KernelParams(),
    direction: str = "sublevel",
    ids: Sequence[str] | None = None,
    thresholds: np.ndarray | None = None,
) -> GramMatrix:
    """Pairwise filtration kernel with dataset-wide thresholds.

    ``direction="sublevel"`` (temporal filtrations, small = strong) maps
    weights to ``w_max - w`` with ``w_max`` the largest finite value over the
    dataset; ``"superlevel"`` uses the values as given.
    """
    if direction not in ("sublevel", "superlevel"):
        raise ValueError("direction must be 'sublevel' or 'superlevel'")
    graphs = list(graphs)
    if direction == "sublevel":
        w_max = max((g.max_finite() for g in graphs), default=0.0)
        graphs = [superlevel_weights(g, w_max) for g in graphs]
    if thresholds is None:
        pooled = np.concatenate([g.finite_values() for g in graphs]) if graphs else np.zeros(0)
        thresholds = quantile_thresholds(pooled, params.n_levels)
    tables = [_hist_table(wl_filtration_histograms(g, thresholds, params.wl_depth)) for g in graphs]
    n = len(graphs)
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = _kernel_tables(tables[i], tables[j], thresholds, params.gamma)
    if ids is None:
        ids = [str(i) for i in range(n)]
    return GramMatrix(list(ids), K)


# --------------------------------------------------------------------------
# IO: CSV, header row of ids then n rows of floats

def format_gram(K: GramMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(K.ids)
    for row in K.values:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_gram(K: GramMatrix, path) -> None:
    atomic_write_text(Path(path), format_gram(K))


def read_gram(path) -> GramMatrix:
    with open_text(path) as fh:
        rows = list(csv.reader(fh))
    ids = rows[0]
    vals = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    return GramMatrix(ids, vals.reshape(len(ids), len(ids)))
