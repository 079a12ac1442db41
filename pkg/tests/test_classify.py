from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tempofilt.classify import (
    ClassPlan,
    ExperimentError,
    ExperimentSpec,
    FeatureCache,
    LabeledDataset,
    ModelParams,
    Report,
    RootSpec,
    RunResult,
    SvmParams,
    compute_features,
    load_experiment_spec,
    parse_experiment_spec,
    populate_classes,
    run_experiment,
    stratified_split,
)
from tempofilt.nullmodels import make_rng
from tempofilt.tgraph import TemporalGraph, aggregate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_ROOT = RootSpec(source="contact", n_vertices=30, n_temporal_edges=60, seed=2)


def small_spec(**kw):
    base = dict(
        roots=(SMALL_ROOT,),
        classes=(ClassPlan("root", "re", 6, params=ModelParams(steps=5)),
                 ClassPlan("cm", "re", 6, params=ModelParams(steps=5))),
        n_runs=2,
        seed=3,
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_populate_re_cm_sizes():
    spec = small_spec()
    data = populate_classes(spec)
    assert len(data.graphs) == 12
    assert list(np.bincount(data.labels)) == [6, 6]
    assert data.provenance[0]["model"] == "re" and data.provenance[-1]["class"] == 1
    degs = {tuple(sorted(aggregate(g).degrees())) for g in data.graphs}
    assert len(degs) == 1  # RE and CM both keep the degree sequence


def test_populate_minimal_and_representative():
    spec = small_spec(classes=(ClassPlan("root", "re", 2, include_representative=True),
                               ClassPlan("cm", "ewlss", 2, params=ModelParams(steps=3))))
    data = populate_classes(spec)
    assert len(data.graphs) == 4
    assert data.graphs[0] == SMALL_ROOT.load()


def test_populate_deterministic_and_run_dependent():
    spec = small_spec()
    a, b = populate_classes(spec, 0), populate_classes(spec, 0)
    assert a.graphs == b.graphs
    assert populate_classes(spec, 1).graphs != a.graphs


def test_populate_names_failing_class():
    root = TemporalGraph(4, [(0, 1, 1.0), (1, 2, 2.0), (1, 2, 3.0)])
    spec = small_spec(classes=(ClassPlan("root", "re", 2), ClassPlan("root", "ewlss", 2)))
    with pytest.raises(ExperimentError, match="class 1"):
        populate_classes(spec, roots=[root])


def test_tp_epsilon_range_drawn_per_member():
    T = SMALL_ROOT.load()
    spec = small_spec(classes=(
        ClassPlan("root", "tp", 5, params=ModelParams(fraction=1.0, epsilon=(1.0, 5.0))),
        ClassPlan("root", "tp", 5, params=ModelParams(fraction=1.0, epsilon=(1.0, 1.0))),
    ))
    data = populate_classes(spec, roots=[T])
    shifts = [max(abs(a.t - b.t) for a, b in zip(T.edges, g.edges)) for g in data.graphs]
    assert max(shifts[:5]) > 1.0 and max(shifts[5:]) < 1.0


@pytest.mark.parametrize("kw", [
    dict(test_fraction=0.0), dict(test_fraction=1.0), dict(n_runs=0), dict(pipeline="nn"),
    dict(filtration="median"), dict(classes=(ClassPlan(),)),
    dict(classes=(ClassPlan(count=1), ClassPlan())), dict(classes=(ClassPlan(root=3), ClassPlan())),
    dict(classes=(ClassPlan(population="xx"), ClassPlan())),
])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        small_spec(**kw)


def test_dataset_validation():
    T = TemporalGraph(2, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        LabeledDataset([T, T], [0, 1])
    with pytest.raises(ValueError):
        LabeledDataset([T], [0, 1])


@given(st.lists(st.integers(2, 15), min_size=2, max_size=5), st.integers(0, 1000))
def test_stratified_split_proportions(sizes, seed):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    tr, te = stratified_split(labels, 0.2, make_rng(seed))
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(labels.size))
    for c, n in enumerate(sizes):
        n_te = int(np.sum(labels[te] == c))
        assert abs(n_te - 0.2 * n) <= 1 and 1 <= n_te <= n - 1


def test_report_statistics():
    r = Report([RunResult(i, a, 8, 2, 1.0, 1.0, 1.0) for i, a in enumerate([1.0, 0.5, 0.75])])
    assert r.mean == pytest.approx(0.75)
    assert r.stdev == pytest.approx(0.25)
    csv = r.to_csv().splitlines()
    assert csv[0].startswith("run,accuracy") and len(csv) == 1 + 3 + 2
    assert "mean accuracy 0.7500" in r.table()


def test_run_experiment_deterministic():
    spec = small_spec(n_runs=1)
    r1, r2 = run_experiment(spec), run_experiment(spec)
    assert r1.to_csv() == r2.to_csv()
    assert 0.0 <= r1.mean <= 1.0 and r1.stdev == 0.0


def test_run_experiment_fwl_and_grid():
    spec = small_spec(pipeline="fwl", n_runs=1,
                      svm=SvmParams(c_grid=(0.1, 10.0), gamma_grid=(0.1, 1.0), cv_folds=3))
    r = run_experiment(spec)
    assert r.runs[0].C in (0.1, 10.0) and r.runs[0].gamma in (0.1, 1.0)
    assert r.runs[0].n_test == 2  # round(0.2 * 6) per class


def test_static_filtration_pipeline():
    r = run_experiment(small_spec(pipeline="fwl", filtration="add-core-num", n_runs=1))
    assert 0.0 <= r.mean <= 1.0


def test_freeze_reuses_dataset(monkeypatch):
    import tempofilt.classify as mod

    calls = []
    real = mod.populate_classes
    monkeypatch.setattr(mod, "populate_classes", lambda *a, **k: calls.append(1) or real(*a, **k))
    run_experiment(small_spec(regenerate=False, n_runs=3))
    assert len(calls) == 1


def test_workers_match_sequential():
    spec = small_spec(n_runs=1)
    assert run_experiment(spec).to_csv() == run_experiment(replace(spec, workers=2)).to_csv()


def test_feature_cache_reuse():
    spec = small_spec()
    data = populate_classes(spec)
    cache = FeatureCache()
    f1 = compute_features(spec, data.graphs, cache)
    n = len(cache._store)
    f2 = compute_features(spec, data.graphs, cache)
    assert len(cache._store) == n and all(a is b for a, b in zip(f1, f2))


def test_parse_spec_text():
    text = """
    [root]
    source = random
    n_vertices = 20
    sparsity = 0.2

    [class.0]
    representative = tp
    rep_fraction = 0.05
    rep_epsilon = 1..5
    population = tp
    fraction = 0.02
    epsilon = 2
    count = 4

    [class.1]
    population = re
    passes = 1

    [kernel]
    sigma = 0.5
    degree_weights = 1, 0, 1

    [svm]
    c_grid = 0.1 1 10

    [evaluation]
    n_runs = 3
    regenerate = no
    """
    spec = parse_experiment_spec(text)
    assert spec.roots[0].source == "random" and spec.roots[0].n_vertices == 20
    c0, c1 = spec.classes
    assert c0.rep_params.epsilon == (1.0, 5.0) and c0.params.epsilon == (2.0, 2.0)
    assert c1.params.passes == 1 and c1.count == 20
    assert spec.kernel.sigma == 0.5 and spec.kernel.degree_weights == (1.0, 0.0, 1.0)
    assert spec.svm.c_grid == (0.1, 1.0, 10.0)
    assert spec.n_runs == 3 and spec.regenerate is False


@pytest.mark.parametrize("text", [
    "[root]\nbogus = 1\n[class.0]\n[class.1]\n",
    "[root]\n[class.0]\nwhatever = 2\n[class.1]\n",
    "[root]\n[class.0]\n[class.1]\n[extras]\n",
    "[class.0]\n[class.1]\n",
    "[root]\n[class.0]\n[class.1]\n[kernel]\nsigma = -1\n",
])
def test_parse_spec_rejects(text):
    with pytest.raises(ValueError):
        parse_experiment_spec(text)


@pytest.mark.parametrize("name", ["re_cm_synthetic.cfg", "pure_tp_random.cfg", "re_re_null.cfg",
                                  "hospital_re_cm.cfg"])
def test_shipped_configs_parse(name):
    spec = load_experiment_spec(CONFIGS / name)
    assert len(spec.classes) >= 2


def test_missing_root_file_is_stage_error(tmp_path):
    spec = small_spec(roots=(RootSpec(source="file", path=str(tmp_path / "nope.txt")),))
    with pytest.raises(ExperimentError, match=r"\[root\]"):
        run_experiment(spec)
