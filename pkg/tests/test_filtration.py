import math

import numpy as np
import pytest
from conftest import A, B, C, D, E, F, random_graph
from hypothesis import given
from hypothesis import strategies as st
from oracles import naive_avg, naive_avg_multi, naive_min

from tempofilt.filtration import (
    INF,
    FilteredGraph,
    MultiLabeledError,
    avg_filtration,
    avg_filtration_multi,
    filtrate,
    min_filtration,
    read_filtered_graph,
    static_filtration,
    write_filtered_graph,
)
from tempofilt.tgraph import TemporalEdge, TemporalGraph, aggregate


def key(a, b):
    return (min(a, b), max(a, b))


def test_min_loop_graph(loop_graph):
    f = min_filtration(loop_graph).values()
    expect = {key(A, B): 2, key(B, C): 2, key(C, D): 2, key(D, E): 2, key(E, A): 2, key(B, F): 2, key(F, C): 3}
    assert f == expect


def test_avg_loop_graph(loop_graph):
    f = avg_filtration(loop_graph).values()
    assert f[key(A, B)] == pytest.approx(5.0, abs=1e-12)
    assert f[key(C, D)] == pytest.approx(8 / 3, abs=1e-12)
    assert f[key(E, A)] == pytest.approx(5.5, abs=1e-12)
    assert f[key(B, F)] == pytest.approx(10 / 3, abs=1e-12)
    assert f[key(B, C)] == pytest.approx(3.25, abs=1e-12)
    assert f[key(D, E)] == pytest.approx(2.0, abs=1e-12)
    assert f[key(F, C)] == pytest.approx(13 / 3, abs=1e-12)


def test_multi_matches_avg_on_single(loop_graph):
    assert avg_filtration_multi(loop_graph).values() == pytest.approx(avg_filtration(loop_graph).values(), abs=1e-12)


def test_multi_multi_graph(multi_graph):
    f = avg_filtration_multi(multi_graph).values()
    assert f[key(B, F)] == pytest.approx(34 / 6, abs=1e-12)
    assert f[key(F, C)] == pytest.approx(20 / 6, abs=1e-12)


def test_single_only_methods_reject_multi(multi_graph):
    with pytest.raises(MultiLabeledError):
        avg_filtration(multi_graph)
    with pytest.raises(MultiLabeledError):
        min_filtration(multi_graph)


def test_isolated_edge_is_inf():
    T = TemporalGraph(4, [(0, 1, 1.0), (2, 3, 5.0)])
    assert set(avg_filtration(T).values().values()) == {INF}
    assert set(min_filtration(T).values().values()) == {INF}
    assert set(avg_filtration_multi(T).values().values()) == {INF}


def test_parallel_contacts_are_not_neighbours():
    T = TemporalGraph(3, [(0, 1, 1.0), (0, 1, 4.0)])
    assert avg_filtration_multi(T).values() == {(0, 1): INF}


def test_equal_timestamps_give_zero():
    T = TemporalGraph(3, [(0, 1, 2.0), (1, 2, 2.0)])
    assert avg_filtration(T).values() == {(0, 1): 0.0, (1, 2): 0.0}


@pytest.mark.parametrize("seed", range(30))
def test_avg_matches_oracle(seed):
    T = random_graph(np.random.default_rng(seed), n_max=15, m_max=60)
    f = avg_filtration(T).values()
    g = naive_avg(T)
    assert f.keys() == g.keys()
    for k in f:
        assert f[k] == g[k] or abs(f[k] - g[k]) <= 1e-9


@pytest.mark.parametrize("seed", range(30))
def test_min_matches_oracle(seed):
    T = random_graph(np.random.default_rng(seed), n_max=15, m_max=60)
    assert min_filtration(T).values() == naive_min(T)


@pytest.mark.parametrize("seed", range(30))
def test_multi_matches_oracle(seed):
    T = random_graph(np.random.default_rng(100 + seed), n_max=10, m_max=60, multi=True, integer_times=True)
    f = avg_filtration_multi(T).values()
    g = naive_avg_multi(T)
    assert f.keys() == g.keys()
    for k in f:
        assert f[k] == g[k] or abs(f[k] - g[k]) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.floats(-500, 500), st.floats(0.1, 10))
def test_avg_affine_equivariance(seed, shift, scale):
    T = random_graph(np.random.default_rng(seed))
    f = avg_filtration(T).values()
    g = avg_filtration(T.with_times([scale * e.t + shift for e in T.edges])).values()
    for k in f:
        if f[k] == INF:
            assert g[k] == INF
        else:
            assert g[k] == pytest.approx(scale * f[k], rel=1e-9, abs=1e-7)


@given(st.integers(0, 2**32 - 1))
def test_min_below_avg(seed):
    T = random_graph(np.random.default_rng(seed))
    fm, fa = min_filtration(T).values(), avg_filtration(T).values()
    assert all(fm[k] <= fa[k] + 1e-12 for k in fm)
    assert all(v >= 0 for v in fa.values())


def test_block_sweep_matches_dense(monkeypatch):
    import tempofilt.filtration as mod

    rng = np.random.default_rng(5)
    n = 60
    T = TemporalGraph(n, [TemporalEdge(0, v, float(rng.uniform(0, 10))) for v in range(1, n)]
                      + [TemporalEdge(v, v + 1, float(rng.uniform(0, 10))) for v in range(1, n - 1)])
    dense = avg_filtration(T).values()
    monkeypatch.setattr(mod, "_SWEEP_BLOCK", 7)
    blocked = avg_filtration(T).values()
    assert all(abs(dense[k] - blocked[k]) <= 1e-9 for k in dense)


def test_static_filtrations(loop_graph):
    G = aggregate(loop_graph)
    deg = static_filtration(G, "add-max-deg").values()
    assert deg[key(A, B)] == 3 and deg[key(D, E)] == 2
    core = static_filtration(G, "add-core-num").values()
    assert set(core.values()) == {2}
    tri = static_filtration(G, "add-triangle").values()
    assert tri[key(B, C)] == 0.5 and tri[key(D, E)] == 0
    with pytest.raises(ValueError):
        static_filtration(G, "add-nothing")


def test_filtrate_dispatch(loop_graph, multi_graph):
    assert filtrate(loop_graph, "avg") == avg_filtration(loop_graph)
    assert filtrate(multi_graph, "avg_mlt") == avg_filtration_multi(multi_graph)
    with pytest.raises(ValueError):
        filtrate(loop_graph, "median")


def test_filtered_graph_validation():
    with pytest.raises(ValueError):
        FilteredGraph(3, ((0, 1, 1.0), (1, 0, 2.0)))
    with pytest.raises(ValueError):
        FilteredGraph(3, ((0, 1, -1.0),))
    with pytest.raises(ValueError):
        FilteredGraph(3, ((0, 0, 1.0),))


def test_filtered_graph_roundtrip(tmp_path, loop_graph):
    G = avg_filtration(TemporalGraph(8, list(loop_graph.edges) + [(6, 7, 0.1)]))
    assert math.isinf(G.values()[(6, 7)])
    p = tmp_path / "g.wg"
    write_filtered_graph(G, p)
    assert read_filtered_graph(p) == G
