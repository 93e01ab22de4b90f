import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from quasieq.cli import main
from quasieq.io import write_edge_list
from quasieq import DirectedGraph, sample_graph
from synthetic import random_graph, reciprocal_rcm


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def snapdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("snaps")
    gen = reciprocal_rcm(20, seed=2)
    names = tuple(f"n{i}" for i in range(20))
    for s in range(8):
        g = sample_graph(gen, seed=0, sample_id=s)
        write_edge_list(DirectedGraph(g.adjacency, names), d / f"q{s}.edges")
    return d


@pytest.fixture
def tiny(tmp_path):
    g = random_graph(4, 0.5, np.random.default_rng(1))
    write_edge_list(g, tmp_path / "tiny.edges")
    return tmp_path / "tiny.edges"


def test_fit_formats(snapdir):
    code, text = run("fit", snapdir, "--model", "rcm")
    assert code == 0 and "converged=True" in text.splitlines()[0]
    code, text = run("fit", snapdir, "--model", "dcm", "--format", "json", "--snapshot", "q3")
    data = json.loads(text)
    assert data["snapshot"] == "q3" and data["kind"] == "dcm" and len(data["x"]) == 20
    code, text = run("fit", snapdir, "--model", "drg", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["p", "x", "links", "expected_links"]


def test_census_json(snapdir):
    code, text = run("census", snapdir, "--format", "json")
    data = json.loads(text)
    assert code == 0 and len(data["counts"]) == 19
    triads = [c for c in data["counts"] if c["class"] != "dyad"]
    assert sum(c["unordered"] for c in triads) == 20 * 19 * 18 // 6


def test_zscore_writes_reports(snapdir, tmp_path):
    code, text = run("zscore", snapdir, "--model", "dcm,rcm", "--format", "csv", "--out", tmp_path)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 32
    assert {r["model"] for r in rows} == {"dcm", "rcm"}
    assert (tmp_path / "zscores.csv").read_text().count("\n") == 33


def test_temporal_is_deterministic(snapdir, tmp_path):
    outputs = []
    for run_id in range(2):
        d = tmp_path / f"r{run_id}"
        code, text = run("temporal", snapdir, "--out", d, "--seed", 7, "--window", 3)
        assert code == 0 and "collapse score" in text
        outputs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert outputs[0] == outputs[1]
    report = json.loads(outputs[0]["report.json"])
    assert set(report["series"]) == {"dcm", "rcm"}
    assert report["metadata"]["seed"] == 7
    assert report["metadata"]["config"]["window"] == 3


def test_temporal_json_only(snapdir, tmp_path):
    code, _ = run("temporal", snapdir, "--out", tmp_path, "--model", "rcm", "--format", "json")
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.json"]


def test_sample_outputs(snapdir, tmp_path):
    code, text = run("sample", snapdir, "--samples", 4, "--seed", 3, "--out", tmp_path, "--format", "json")
    assert code == 0
    assert json.loads(text)["samples"] == 4
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == [f"sample_{s:05d}.edges" for s in range(4)]
    first = (tmp_path / files[0]).read_text()
    run("sample", snapdir, "--samples", 1, "--seed", 3, "--out", tmp_path / "again")
    assert (tmp_path / "again" / files[0]).read_text() == first


def test_oracle(tiny, snapdir):
    code, text = run("oracle", tiny)
    assert code == 0 and "ok at" in text
    code, _ = run("oracle", snapdir)
    assert code == 3


def test_config_file_sets_defaults(snapdir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "rcm", "format": "json"}))
    code, text = run("--config", cfg, "fit", snapdir)
    assert code == 0 and json.loads(text)["kind"] == "rcm"


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["fit", "{snaps}", "--model", "rcm", "--max-iter", "1"], 2),
        (["fit", "{complete}"], 2),
        (["fit", "{missing}"], 3),
        (["census", "{bad}"], 3),
        (["fit", "{snaps}", "--snapshot", "nope"], 3),
        (["--config", "{missing}", "fit", "{snaps}"], 3),
    ],
)
def test_exit_codes(argv, expected, snapdir, tmp_path, capsys):
    complete = tmp_path / "complete.edges"
    write_edge_list(DirectedGraph(1 - np.eye(4, dtype=int)), complete)
    bad = tmp_path / "bad.edges"
    bad.write_text("a b\na b c\n")
    paths = {"snaps": snapdir, "complete": complete, "missing": tmp_path / "missing", "bad": bad}
    code, _ = run(*[a.format(**paths) for a in argv])
    assert code == expected
    assert capsys.readouterr().err.startswith("quasieq:")


def test_bad_window_rejected(snapdir, tmp_path):
    with pytest.raises(SystemExit) as info:
        run("temporal", snapdir, "--out", tmp_path, "--window", 1)
    assert info.value.code == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "quasieq", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("quasieq ")
