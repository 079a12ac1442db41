"""Class population from root graphs, PH / filtered-WL pipelines, and the
repeated stratified 80/20 evaluation harness."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .filtration import METHODS, STATIC_METHODS, FilteredGraph, filtrate
from .generate import ContactModelSpec, RandomGraphSpec, random_temporal_graph, synthetic_contact_graph
from .kernels import GramMatrix, KernelParams, filtration_gram, prepare_diagrams, pss_gram
from .nullmodels import apply_model, cm_rewire, make_rng
from .persistence import PersistenceDiagram, diagram
from .svm import svm_predict, svm_train
from .tgraph import TemporalGraph, read_contact_sequence

log = logging.getLogger(__name__)

PIPELINES = ("ph", "fwl")
REPRESENTATIVES = ("root", "cm", "tp", "re", "ewlss")
POPULATIONS = ("re", "tp", "ewlss", "cm")

# stream ids for derived seeds
_S_REP, _S_MEMBER, _S_SPLIT, _S_CV = 1, 2, 3, 4


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# --------------------------------------------------------------------------
# spec

@dataclass(frozen=True)
class RootSpec:
    source: str = "contact"               # file | random | contact
    path: str | None = None
    columns: str = "tuv"
    n_vertices: int = 100
    n_temporal_edges: int = 200
    n_static_edges: int | None = None
    mixing: str = "assortative"
    mixing_strength: float = 0.0
    sparsity: float = 0.1
    t_min: float = 0.0
    t_max: float = 100.0
    seed: int = 0

    def load(self) -> TemporalGraph:
        if self.source == "file":
            if not self.path:
                raise ValueError("root source 'file' needs a path")
            return read_contact_sequence(self.path, self.columns)
        if self.source == "random":
            return random_temporal_graph(
                RandomGraphSpec(self.n_vertices, self.sparsity, (self.t_min, self.t_max), self.seed)
            )
        if self.source == "contact":
            return synthetic_contact_graph(ContactModelSpec(
                self.n_vertices, self.n_temporal_edges, self.mixing, self.mixing_strength,
                seed=self.seed, n_static_edges=self.n_static_edges, t_max=self.t_max,
            ))
        raise ValueError(f"unknown root source {self.source!r}")


@dataclass(frozen=True)
class ModelParams:
    """Knobs for one null-model application.

    ``epsilon`` is a ``(lo, hi)`` range; each TP application draws its bound
    uniformly from it. ``steps`` counts RE exchange attempts (or EWLSS swaps);
    ``passes`` asks RE for whole passes over the edge list instead.
    """

    fraction: float = 0.0
    epsilon: tuple[float, float] = (1.0, 1.0)
    steps: int = 20
    passes: int | None = None


@dataclass(frozen=True)
class ClassPlan:
    representative: str = "root"
    population: str = "re"
    count: int = 20
    root: int = 0
    rep_params: ModelParams = ModelParams()
    params: ModelParams = ModelParams()
    include_representative: bool = False


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    c_grid: tuple[float, ...] = ()
    sigma_grid: tuple[float, ...] = ()
    gamma_grid: tuple[float, ...] = ()
    cv_folds: int = 5
    tol: float = 1e-3


@dataclass(frozen=True)
class ExperimentSpec:
    roots: tuple[RootSpec, ...]
    classes: tuple[ClassPlan, ...]
    pipeline: str = "ph"
    filtration: str = "auto"
    max_degree: int = 2
    kernel: KernelParams = KernelParams()
    svm: SvmParams = SvmParams()
    test_fraction: float = 0.2
    n_runs: int = 5
    seed: int = 0
    regenerate: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}")
        if self.filtration != "auto" and self.filtration not in METHODS:
            raise ValueError(f"filtration must be 'auto' or one of {METHODS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if len(self.classes) < 2:
            raise ValueError("at least two classes are required")
        for k, c in enumerate(self.classes):
            if c.count < 2:
                raise ValueError(f"class {k}: count must be at least 2")
            if c.representative not in REPRESENTATIVES:
                raise ValueError(f"class {k}: representative must be one of {REPRESENTATIVES}")
            if c.population not in POPULATIONS:
                raise ValueError(f"class {k}: population must be one of {POPULATIONS}")
            if not 0 <= c.root < len(self.roots):
                raise ValueError(f"class {k}: root index {c.root} out of range")


@dataclass
class LabeledDataset:
    graphs: list[TemporalGraph]
    labels: np.ndarray
    provenance: list[dict] = field(default_factory=list)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.graphs) != self.labels.size:
            raise ValueError("one label per graph required")
        if len(self.graphs):
            _, counts = np.unique(self.labels, return_counts=True)
            if counts.size < 2 or counts.min() < 2:
                raise ValueError("need at least two classes with two graphs each")

    @property
    def ids(self) -> list[str]:
        return [f"g{i}" for i in range(len(self.graphs))]


# --------------------------------------------------------------------------
# population

def _apply(T: TemporalGraph, model: str, params: ModelParams, rng: np.random.Generator) -> TemporalGraph:
    if model == "root":
        return T
    if model == "cm":
        return cm_rewire(T, rng)
    if model == "re" and params.passes is not None:
        from .nullmodels import re_shuffle
        return re_shuffle(T, rng, passes=params.passes)
    lo, hi = params.epsilon
    eps = lo if hi <= lo else float(rng.uniform(lo, hi))
    return apply_model(T, model, rng, fraction=params.fraction, epsilon=eps, steps=params.steps)


def populate_classes(spec: ExperimentSpec, run: int = 0, roots: Sequence[TemporalGraph] | None = None) -> LabeledDataset:
    """Generate every class from its representative via its population model.

    Representatives are derived from a root (``root`` itself, a CM variant, or
    a TP/RE/EWLSS-shifted copy); members are loose copies of the
    representative. Seeds derive from ``(spec.seed, run, class, member)``.
    """
    if roots is None:
        roots = [r.load() for r in spec.roots]
    graphs, labels, prov = [], [], []
    for c, plan in enumerate(spec.classes):
        try:
            rep = _apply(roots[plan.root], plan.representative, plan.rep_params,
                         make_rng(spec.seed, _S_REP, run, c))
            if plan.include_representative:
                graphs.append(rep)
                labels.append(c)
                prov.append({"class": c, "member": -1, "root": plan.root, "model": plan.representative})
            for k in range(plan.count - int(plan.include_representative)):
                rng = make_rng(spec.seed, _S_MEMBER, run, c, k)
                graphs.append(_apply(rep, plan.population, plan.params, rng))
                labels.append(c)
                prov.append({"class": c, "member": k, "root": plan.root, "model": plan.population,
                             "seed": (spec.seed, _S_MEMBER, run, c, k)})
        except ValueError as exc:
            raise ExperimentError("populate", f"class {c}: {exc}") from exc
    return LabeledDataset(graphs, np.array(labels), prov)


# --------------------------------------------------------------------------
# features

def resolve_method(spec_method: str, T: TemporalGraph) -> str:
    if spec_method != "auto":
        return spec_method
    return "avg" if T.single_labeled else "avg-mlt"


def _ph_features(args) -> PersistenceDiagram:
    T, method, max_degree = args
    return diagram(filtrate(T, resolve_method(method, T)), max_degree=max_degree)


def _fwl_features(args) -> FilteredGraph:
    T, method = args
    return filtrate(T, resolve_method(method, T))


def _pmap(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


class FeatureCache:
    """Per-graph artifacts keyed by (graph content, pipeline settings)."""

    def __init__(self):
        self._store: dict = {}

    def get_many(self, graphs, key_extra, fn, args_of, workers=1):
        keys = [(g, key_extra) for g in graphs]
        missing = [k for k in dict.fromkeys(keys) if k not in self._store]
        for k, val in zip(missing, _pmap(fn, [args_of(k[0]) for k in missing], workers)):
            self._store[k] = val
        return [self._store[k] for k in keys]


def compute_features(spec: ExperimentSpec, graphs: list[TemporalGraph], cache: FeatureCache | None = None):
    cache = cache or FeatureCache()
    if spec.pipeline == "ph":
        return cache.get_many(graphs, ("ph", spec.filtration, spec.max_degree), _ph_features,
                              lambda g: (g, spec.filtration, spec.max_degree), spec.workers)
    return cache.get_many(graphs, ("fwl", spec.filtration), _fwl_features,
                          lambda g: (g, spec.filtration), spec.workers)


def gram_from_features(spec: ExperimentSpec, features, kernel: KernelParams, ids=None) -> GramMatrix:
    if spec.pipeline == "ph":
        prepared = prepare_diagrams(features, kernel.essential_cap, kernel.threshold)
        return pss_gram(prepared, kernel.sigma, kernel.degree_weights, ids)
    direction = "superlevel" if spec.filtration in STATIC_METHODS else "sublevel"
    return filtration_gram(features, kernel, direction, ids)


# --------------------------------------------------------------------------
# evaluation

def stratified_split(labels: np.ndarray, test_fraction: float, rng: np.random.Generator):
    """Per-class shuffle; ``round(test_fraction * n_c)`` test items, at least one on each side."""
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        n_test = min(max(n_test, 1), idx.size - 1)
        test.extend(idx[:n_test].tolist())
        train.extend(idx[n_test:].tolist())
    return np.array(sorted(train)), np.array(sorted(test))


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    return float(np.mean(pred == truth)) if truth.size else 0.0


def _cv_score(K: np.ndarray, y: np.ndarray, C: float, folds: int, rng, tol: float) -> float:
    _, counts = np.unique(y, return_counts=True)
    folds = max(2, min(folds, int(counts.min())))
    fold_of = np.empty(y.size, dtype=np.int64)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % folds
    scores = []
    for f in range(folds):
        tr, te = np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)
        m = svm_train(K[np.ix_(tr, tr)], y[tr], C, tol)
        scores.append(accuracy(svm_predict(m, K[np.ix_(te, tr)]), y[te]))
    return float(np.mean(scores))


def _kernel_grid(spec: ExperimentSpec) -> list[KernelParams]:
    k = spec.kernel
    if spec.pipeline == "ph" and spec.svm.sigma_grid:
        return [replace(k, sigma=s) for s in spec.svm.sigma_grid]
    if spec.pipeline == "fwl" and spec.svm.gamma_grid:
        return [replace(k, gamma=g) for g in spec.svm.gamma_grid]
    return [k]


@dataclass
class RunResult:
    run: int
    accuracy: float
    n_train: int
    n_test: int
    C: float
    sigma: float
    gamma: float


@dataclass
class Report:
    runs: list[RunResult]

    @property
    def accuracies(self) -> list[float]:
        return [r.accuracy for r in self.runs]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def stdev(self) -> float:
        return statistics.stdev(self.accuracies) if len(self.runs) > 1 else 0.0

    def table(self) -> str:
        lines = [f"{'run':>4}  {'accuracy':>8}  {'train':>5}  {'test':>4}  {'C':>8}  {'sigma':>8}  {'gamma':>8}"]
        for r in self.runs:
            lines.append(f"{r.run:>4}  {r.accuracy:>8.4f}  {r.n_train:>5}  {r.n_test:>4}  "
                         f"{r.C:>8.4g}  {r.sigma:>8.4g}  {r.gamma:>8.4g}")
        lines.append(f"mean accuracy {self.mean:.4f}  stdev {self.stdev:.4f}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "accuracy", "n_train", "n_test", "C", "sigma", "gamma"])
        for r in self.runs:
            w.writerow([r.run, repr(r.accuracy), r.n_train, r.n_test, repr(r.C), repr(r.sigma), repr(r.gamma)])
        w.writerow(["mean", repr(self.mean), "", "", "", "", ""])
        w.writerow(["stdev", repr(self.stdev), "", "", "", "", ""])
        return buf.getvalue()


def evaluate_run(spec: ExperimentSpec, data: LabeledDataset, features, run: int) -> RunResult:
    y = data.labels
    train, test = stratified_split(y, spec.test_fraction, make_rng(spec.seed, _S_SPLIT, run))
    grams = {}
    try:
        for kp in _kernel_grid(spec):
            grams[kp] = gram_from_features(spec, features, kp, data.ids).values
    except Exception as exc:
        raise ExperimentError("kernel", str(exc)) from exc
    c_grid = spec.svm.c_grid or (spec.svm.C,)
    best = None
    if len(grams) * len(c_grid) > 1:
        for (kp, K), C in product(grams.items(), c_grid):
            Ktr = K[np.ix_(train, train)]
            score = _cv_score(Ktr, y[train], C, spec.svm.cv_folds, make_rng(spec.seed, _S_CV, run), spec.svm.tol)
            if best is None or score > best[0]:
                best = (score, kp, C)
        _, kp, C = best
    else:
        kp, C = next(iter(grams)), c_grid[0]
    K = grams[kp]
    try:
        model = svm_train(K[np.ix_(train, train)], y[train], C, spec.svm.tol)
        pred = svm_predict(model, K[np.ix_(test, train)])
    except Exception as exc:
        raise ExperimentError("svm", str(exc)) from exc
    return RunResult(run, accuracy(pred, y[test]), train.size, test.size, C, kp.sigma, kp.gamma)


def run_experiment(spec: ExperimentSpec, roots: Sequence[TemporalGraph] | None = None) -> Report:
    try:
        roots = list(roots) if roots is not None else [r.load() for r in spec.roots]
    except (OSError, ValueError) as exc:
        raise ExperimentError("root", str(exc)) from exc
    cache = FeatureCache()
    results = []
    frozen = None
    for run in range(spec.n_runs):
        if spec.regenerate or frozen is None:
            data = populate_classes(spec, run if spec.regenerate else 0, roots)
            frozen = data
        data = frozen
        try:
            features = compute_features(spec, data.graphs, cache)
        except Exception as exc:
            raise ExperimentError("features", str(exc)) from exc
        res = evaluate_run(spec, data, features, run)
        log.info("run %d accuracy %.4f", run, res.accuracy)
        results.append(res)
    return Report(results)


# --------------------------------------------------------------------------
# spec files: INI-style ``key = value`` sections

def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _range(s: str) -> tuple[float, float]:
    s = s.strip()
    if ".." in s:
        lo, hi = s.split("..", 1)
        return float(lo), float(hi)
    v = float(s)
    return v, v


def _bool(s: str) -> bool:
    return s.strip().lower() in ("1", "true", "yes", "on")


_ROOT_KEYS = {
    "source": str, "path": str, "columns": str, "n_vertices": int, "n_temporal_edges": int,
    "n_static_edges": int, "mixing": str, "mixing_strength": float, "sparsity": float,
    "t_min": float, "t_max": float, "seed": int,
}


def _model_params(sec, prefix: str) -> ModelParams:
    kw = {}
    if f"{prefix}fraction" in sec:
        kw["fraction"] = float(sec[f"{prefix}fraction"])
    if f"{prefix}epsilon" in sec:
        kw["epsilon"] = _range(sec[f"{prefix}epsilon"])
    if f"{prefix}steps" in sec:
        kw["steps"] = int(sec[f"{prefix}steps"])
    if f"{prefix}passes" in sec:
        kw["passes"] = int(sec[f"{prefix}passes"])
    return ModelParams(**kw)


def parse_experiment_spec(text: str, base_dir: Path | None = None) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    known = {"pipeline", "kernel", "svm", "evaluation"}
    roots: dict[int, RootSpec] = {}
    classes: dict[int, ClassPlan] = {}
    for name in cp.sections():
        sec = cp[name]
        head, _, idx = name.partition(".")
        if head == "root":
            kw = {}
            for k, v in sec.items():
                if k not in _ROOT_KEYS:
                    raise ValueError(f"[{name}] unknown key {k!r}")
                kw[k] = _ROOT_KEYS[k](v)
            if "path" in kw and base_dir is not None and not Path(kw["path"]).is_absolute():
                kw["path"] = str(base_dir / kw["path"])
            roots[int(idx or 0)] = RootSpec(**kw)
        elif head == "class":
            allowed = {"representative", "population", "count", "root", "include_representative"}
            allowed |= {p + k for p in ("", "rep_") for k in ("fraction", "epsilon", "steps", "passes")}
            for k in sec:
                if k not in allowed:
                    raise ValueError(f"[{name}] unknown key {k!r}")
            classes[int(idx)] = ClassPlan(
                representative=sec.get("representative", "root"),
                population=sec.get("population", "re"),
                count=int(sec.get("count", 20)),
                root=int(sec.get("root", 0)),
                rep_params=_model_params(sec, "rep_"),
                params=_model_params(sec, ""),
                include_representative=_bool(sec.get("include_representative", "false")),
            )
        elif name not in known:
            raise ValueError(f"unknown section [{name}]")

    kw: dict = {}
    if cp.has_section("pipeline"):
        p = cp["pipeline"]
        for k in p:
            if k not in ("kind", "filtration", "max_degree"):
                raise ValueError(f"[pipeline] unknown key {k!r}")
        kw["pipeline"] = p.get("kind", "ph")
        kw["filtration"] = p.get("filtration", "auto")
        kw["max_degree"] = int(p.get("max_degree", 2))
    kp = {}
    if cp.has_section("kernel"):
        types = {"sigma": float, "gamma": float, "wl_depth": int, "n_levels": int,
                 "degree_weights": _floats, "essential_cap": float, "threshold": float}
        for k, v in cp["kernel"].items():
            if k not in types:
                raise ValueError(f"[kernel] unknown key {k!r}")
            kp[k] = types[k](v)
    kw["kernel"] = KernelParams(**kp)
    sp = {}
    if cp.has_section("svm"):
        types = {"C": float, "c_grid": _floats, "sigma_grid": _floats, "gamma_grid": _floats,
                 "cv_folds": int, "tol": float}
        for k, v in cp["svm"].items():
            if k not in types:
                raise ValueError(f"[svm] unknown key {k!r}")
            sp[k] = types[k](v)
    kw["svm"] = SvmParams(**sp)
    if cp.has_section("evaluation"):
        types = {"test_fraction": float, "n_runs": int, "seed": int, "regenerate": _bool, "workers": int}
        for k, v in cp["evaluation"].items():
            if k not in types:
                raise ValueError(f"[evaluation] unknown key {k!r}")
            kw[k] = types[k](v)
    if not roots:
        raise ValueError("spec needs a [root] section")
    return ExperimentSpec(
        roots=tuple(roots[k] for k in sorted(roots)),
        classes=tuple(classes[k] for k in sorted(classes)),
        **kw,
    )


def load_experiment_spec(path) -> ExperimentSpec:
    path = Path(path)
    return parse_experiment_spec(path.read_text(encoding="utf-8"), path.parent)
