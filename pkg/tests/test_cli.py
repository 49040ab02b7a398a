import json
import subprocess
import sys

import numpy as np
import pytest

from ncpick import io as nio
from ncpick.cli import main
from ncpick.zoo import shift_dft


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def scalar_problem(tmp_path, x, y):
    node = write(tmp_path / "node.json", nio.rowtuple_to_json(np.array([[[x]]])))
    target = write(tmp_path / "y.json", nio.matrix_to_json(np.array([[y]])))
    return node, target


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


@pytest.mark.parametrize("y,code", [(0.5, 0), (2.0, 10)])
def test_feasible_scalar(tmp_path, capsys, y, code):
    node, target = scalar_problem(tmp_path, 0.0, y)
    got, out = run(["feasible", node, target], capsys)
    assert got == code
    payload = json.loads(out)
    assert np.isclose(payload["margin"], 1 - y * y)


def test_feasible_not_in_algebra(tmp_path, capsys):
    node = write(tmp_path / "n.json", nio.rowtuple_to_json(np.diag([0.0, 0.5])[None]))
    E = np.zeros((2, 2))
    E[0, 1] = 1
    target = write(tmp_path / "y.json", nio.matrix_to_json(E))
    code, out = run(["feasible", node, target], capsys)
    assert code == 11
    assert json.loads(out)["algResiduals"][0]["residual"] > 0.5
    code, _ = run(["alg-member", node, target], capsys)
    assert code == 11


def test_npnorm_scalar(tmp_path, capsys):
    node, target = scalar_problem(tmp_path, 0.3, 0.7)
    code, out = run(["npnorm", node, target, "--out", str(tmp_path / "r.json")], capsys)
    assert code == 0
    # scalar NP norm at one node is |y|
    assert np.isclose(json.loads(out)["npNorm"], 0.7)
    assert (tmp_path / "r.json.manifest.json").exists()


def test_npnorm_anp(tmp_path, capsys):
    node = write(tmp_path / "n.json", {"kind": "shift-dft", "n": 2})
    E = np.zeros((2, 2))
    E[0, 1] = 1
    target = write(tmp_path / "y.json", nio.matrix_to_json(E))
    trace = tmp_path / "trace.csv"
    code, out = run(["npnorm", node, target, "--anp", "--trace-csv", str(trace)], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["nonIncreasing"]
    assert trace.read_text().splitlines()[0] == "t,np_norm,target_norm,ratio"


def test_npnorm_anp_precondition(tmp_path, capsys):
    node = write(tmp_path / "n.json", nio.rowtuple_to_json(0.5 * shift_dft(2).mats))
    target = write(tmp_path / "y.json", nio.matrix_to_json(np.eye(2)))
    code, _ = run(["npnorm", node, target, "--anp"], capsys)
    assert code == 12


def test_choi_closed_form(tmp_path, capsys):
    node = write(tmp_path / "n.json", {"kind": "choi-point", "n": 2})
    target = write(tmp_path / "y.json", nio.matrix_to_json(0.1 * np.eye(2)))
    code, out = run(["npnorm", node, target, "--choi-closed-form"], capsys)
    assert code == 0
    assert json.loads(out)["maxGap"] <= 1e-10


@pytest.mark.parametrize("argv", [
    ["examples", "nope", "2"],
    ["examples", "weighted-unitaries", "2", "--weights", "1,1"],
    ["feasible", "/nonexistent.json", "/nonexistent.json"],
])
def test_usage_errors(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_examples_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["examples", "random-normalized", "2", "--seed", "7", "--epsilon", "0.01",
                     "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    X = nio.rowtuple_from_json(json.loads(a.read_text()))
    G = sum(x @ x.conj().T for x in X.mats)
    assert np.allclose(G, 0.99 ** 2 * np.eye(2), atol=1e-12)


def test_examples_choi_point(capsys):
    code, out = run(["examples", "choi-point", "2"], capsys)
    assert code == 0 and json.loads(out)["d"] == 4


def test_search_budget_exit(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"m": 1, "max_trials": 50})
    prefix = str(tmp_path / "m1")
    code, _ = run(["search", cfg, "--out", prefix], capsys)
    assert code == 20
    best = json.loads((tmp_path / "m1.best.json").read_text())
    assert not best["success"] and best["trials"] == 50
    assert len((tmp_path / "m1.csv").read_text().splitlines()) == 51


def test_search_bad_config(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"m": 9})
    assert main(["search", cfg, "--out", str(tmp_path / "x")]) == 2


def test_search_manifest_replay(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"gamma": 1.35, "max_trials": 2000})
    assert main(["search", cfg, "--out", str(tmp_path / "a")]) == 0
    manifest = str(tmp_path / "a.manifest.json")
    assert main(["search", "--manifest", manifest, "--jobs", "2",
                 "--out", str(tmp_path / "b")]) == 0
    for ext in (".csv", ".best.json"):
        assert (tmp_path / f"a{ext}").read_bytes() == (tmp_path / f"b{ext}").read_bytes()


def test_search_deterministic(tmp_path, capsys):
    code, out = run(["search", "--deterministic", "2", "0.999", "--out", str(tmp_path / "d")],
                    capsys)
    assert code == 0 and "ratio" in out
    best = json.loads((tmp_path / "d.best.json").read_text())
    assert best["best"]["ratio"] > 1.3


def test_verify_quick_and_corrupt(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--level", "quick", "--jobs", "1", "--out", str(out)]) == 0
    assert all(s["passed"] for s in json.loads(out.read_text())["suites"])
    assert main(["verify", "--level", "quick", "--jobs", "1", "--corrupt-psi"]) == 30
    failing = capsys.readouterr().err
    assert "psi-involution" in failing


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ncpick", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout
