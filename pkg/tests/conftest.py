import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from tempofilt.tgraph import TemporalEdge, TemporalGraph

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

NAMES = ["A", "B", "C", "D", "E", "F"]
A, B, C, D, E, F = range(6)

LOOP_LINES = ["1 A B", "3 B C", "6 C D", "8 D E", "10 E A", "5 B F", "9 F C"]
MULTI_LINES = [
    "A B 1", "A B 5", "A B 7", "B C 3", "B C 4", "C D 6", "C D 8",
    "D E 8", "D E 11", "E A 7", "E A 10", "B F 5", "B F 8", "F C 9",
]


def _graph(triples):
    return TemporalGraph(6, [TemporalEdge(u, v, t) for u, v, t in triples], NAMES)


@pytest.fixture
def loop_graph():
    return _graph([(A, B, 1), (B, C, 3), (C, D, 6), (D, E, 8), (E, A, 10), (B, F, 5), (F, C, 9)])


@pytest.fixture
def multi_graph():
    return _graph([
        (A, B, 1), (A, B, 5), (A, B, 7), (B, C, 3), (B, C, 4), (C, D, 6), (C, D, 8),
        (D, E, 8), (D, E, 11), (E, A, 7), (E, A, 10), (B, F, 5), (B, F, 8), (F, C, 9),
    ])


def random_graph(rng: np.random.Generator, n_max=12, m_max=40, multi=False, integer_times=False):
    """Random temporal graph; single-labeled unless ``multi``."""
    n = int(rng.integers(3, n_max + 1))
    total = n * (n - 1) // 2
    iu, iv = np.triu_indices(n, 1)
    if multi:
        m = int(rng.integers(1, m_max + 1))
        ks = rng.integers(total, size=m)
    else:
        m = int(rng.integers(1, min(total, m_max) + 1))
        ks = rng.choice(total, size=m, replace=False)
    ts = rng.integers(0, 50, size=m).astype(float) if integer_times else rng.uniform(0, 100, size=m)
    return TemporalGraph(n, [TemporalEdge(int(iu[k]), int(iv[k]), float(t)) for k, t in zip(ks, ts)])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: int(k.split()[1])):
            terminalreporter.write_line(RESULTS[key])
