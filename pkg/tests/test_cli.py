import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from conftest import LOOP_LINES

from tempofilt import __version__
from tempofilt.classify import ClassPlan, ExperimentSpec, ModelParams, RootSpec, compute_features, gram_from_features, populate_classes
from tempofilt.cli import main
from tempofilt.filtration import read_filtered_graph
from tempofilt.kernels import KernelParams, read_gram
from tempofilt.persistence import read_diagram
from tempofilt.tgraph import read_contact_sequence, write_contact_sequence


@pytest.fixture
def loop_file(tmp_path):
    p = tmp_path / "loop.tsv"
    p.write_text("\n".join(LOOP_LINES) + "\n")
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_filtrate_writes_seven_edges(loop_file, tmp_path):
    out = tmp_path / "out.wg"
    assert run("filtrate", "--method", "avg", loop_file, "-o", out) == 0
    G = read_filtered_graph(out)
    assert len(G.edges) == 7
    assert sorted(f for _, _, f in G.edges)[-1] == 5.5


def test_missing_input_exit_66(tmp_path, capsys):
    out = tmp_path / "out.wg"
    assert run("filtrate", tmp_path / "nope.tsv", "-o", out) == 66
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: io:")
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_usage_errors_exit_64(loop_file, capsys):
    assert run("filtrate", "--bogus", loop_file) == 64
    assert run("nosuchcommand") == 64
    assert run("--threads", "0", "stats", loop_file) == 64
    assert run("kernel", "pss", loop_file, "--direction", "sublevel") == 64


def test_multilabeled_input_rejected(tmp_path, capsys):
    p = tmp_path / "m.tsv"
    p.write_text("1 a b\n2 a b\n3 b c\n")
    assert run("filtrate", "--method", "avg", p) == 64
    assert "avg_filtration_multi" in capsys.readouterr().err
    assert run("filtrate", "--method", "avg-mlt", p) == 0


def test_malformed_input_exit_66(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("1 a\n")
    assert run("stats", p) == 66


def test_resource_cap_exit_69(tmp_path):
    p = tmp_path / "k.tsv"
    lines = [f"{i + j} v{i} v{j}" for i in range(10) for j in range(i + 1, 10)]
    p.write_text("\n".join(lines) + "\n")
    wg = tmp_path / "k.wg"
    assert run("filtrate", p, "-o", wg) == 0
    assert run("persistence", wg, "--clique-cap", 50) == 69


def test_stats(loop_file, capsys):
    assert run("stats", loop_file) == 0
    rows = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert rows["|V|"] == "6" and rows["|E|"] == "7" and rows["d_max"] == "3"


def test_generate_and_nullmodel_deterministic(tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert run("--seed", 4, "generate", "contact", "--n-vertices", 40, "--n-temporal-edges", 120,
               "--n-static-edges", 80, "-o", a) == 0
    assert run("--seed", 4, "generate", "contact", "--n-vertices", 40, "--n-temporal-edges", 120,
               "--n-static-edges", 80, "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()
    T = read_contact_sequence(a)
    assert T.n_edges == 120 and T.n_vertices == 40
    for model in ("tp", "ewlss", "re", "cm"):
        x, y = tmp_path / f"{model}1.tsv", tmp_path / f"{model}2.tsv"
        args = ["--seed", 9, "nullmodel", a, "--model", model, "--fraction", 0.5, "--steps", 10]
        assert run(*args, "-o", x) == 0 and run(*args, "-o", y) == 0
        assert x.read_bytes() == y.read_bytes()
        assert read_contact_sequence(x).n_edges == 120


def test_generate_random(tmp_path):
    out = tmp_path / "r.tsv.gz"
    assert run("generate", "random", "--n-vertices", 30, "--sparsity", 0.1, "-o", out) == 0
    assert read_contact_sequence(out).n_edges == 43


def test_file_pipeline_matches_in_process(tmp_path):
    spec = ExperimentSpec(
        roots=(RootSpec(source="contact", n_vertices=30, n_temporal_edges=90, n_static_edges=60, seed=5),),
        classes=(ClassPlan("root", "re", 4, params=ModelParams(steps=5)),
                 ClassPlan("cm", "re", 4, params=ModelParams(steps=5))),
        kernel=KernelParams(sigma=0.7),
    )
    data = populate_classes(spec)
    ids = data.ids
    diagrams, wgs = [], []
    for gid, T in zip(ids, data.graphs):
        src, wg, pd = tmp_path / f"{gid}.tsv", tmp_path / f"{gid}.wg", tmp_path / f"{gid}.pd"
        write_contact_sequence(T, src)
        assert run("filtrate", "--method", "avg-mlt", src, "-o", wg) == 0
        assert run("persistence", wg, "-o", pd) == 0
        diagrams.append(pd)
        wgs.append(wg)
    out = tmp_path / "K.csv"
    assert run("kernel", "pss", *diagrams, "--sigma", 0.7, "--ids", ",".join(ids), "-o", out) == 0
    K_file = read_gram(out)
    K_mem = gram_from_features(spec, compute_features(spec, data.graphs), spec.kernel, ids)
    assert K_file.ids == K_mem.ids
    assert np.array_equal(K_file.values, K_mem.values)

    out2 = tmp_path / "F.csv"
    assert run("kernel", "fwl", *wgs, "--ids", ",".join(ids), "-o", out2) == 0
    fspec = ExperimentSpec(roots=spec.roots, classes=spec.classes, pipeline="fwl")
    F_mem = gram_from_features(fspec, compute_features(fspec, data.graphs), fspec.kernel, ids)
    assert np.array_equal(read_gram(out2).values, F_mem.values)
    assert read_diagram(diagrams[0]).max_value > 0


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "[root]\nsource = contact\nn_vertices = 30\nn_temporal_edges = 60\nseed = 2\n"
        "[class.0]\nrepresentative = root\npopulation = re\ncount = 5\nsteps = 5\n"
        "[class.1]\nrepresentative = cm\npopulation = re\ncount = 5\nsteps = 5\n"
        "[evaluation]\nn_runs = 2\n"
    )
    out = tmp_path / "report.csv"
    assert run("--threads", 1, "experiment", "--spec", cfg, "-o", out) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 2 + 2
    assert lines[-2].startswith("mean,") and lines[-1].startswith("stdev,")
    assert "mean accuracy" in capsys.readouterr().out
    out2 = tmp_path / "report2.csv"
    assert run("--threads", 1, "classify", "--spec", cfg, "-o", out2) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_experiment_missing_root_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("[root]\nsource = file\npath = missing.tsv\n[class.0]\n[class.1]\n")
    assert run("experiment", "--spec", cfg) == 66


def test_console_script_entry_point(loop_file):
    res = subprocess.run([sys.executable, "-m", "tempofilt.cli", "stats", str(loop_file)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "|E|\t7" in res.stdout
