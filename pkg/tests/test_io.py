import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncpick import io as nio
from ncpick.pick import BlockTarget, RowTuple
from ncpick.zoo import NodeSpec, shift_dft

from conftest import cgauss

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matrix_roundtrip_is_exact(r, c, data):
    vals = data.draw(st.lists(st.tuples(finite, finite), min_size=r * c, max_size=r * c))
    A = np.array([complex(a, b) for a, b in vals]).reshape(r, c)
    back = nio.matrix_from_json(json.loads(nio.dumps(nio.matrix_to_json(A))))
    assert np.array_equal(back, A)


def test_matrix_is_row_major():
    A = np.array([[1, 2j], [3, 4]])
    assert nio.matrix_to_json(A)["data"] == [[1, 0], [0, 2], [3, 0], [4, 0]]


def test_integer_and_real_entries_accepted():
    M = nio.matrix_from_json({"rows": 1, "cols": 3, "data": [1, [0, 2], 2.5]})
    assert np.array_equal(M, [[1, 2j, 2.5]])


@pytest.mark.parametrize("bad", [
    [],
    {"rows": 2, "cols": 2, "data": [1, 2, 3]},
    {"rows": 0, "cols": 1, "data": []},
    {"rows": 1, "cols": 1, "data": ["x"]},
    {"rows": 1, "cols": 1, "data": [True]},
    {"rows": 1.0, "cols": 1, "data": [1]},
])
def test_bad_matrix(bad):
    with pytest.raises(nio.ParseError):
        nio.matrix_from_json(bad)


def test_rowtuple_roundtrip(rng):
    X = RowTuple(cgauss(rng, (3, 2, 2)))
    back = nio.rowtuple_from_json(json.loads(nio.dumps(nio.rowtuple_to_json(X))))
    assert np.array_equal(back.mats, X.mats)


def test_rowtuple_shape_mismatch():
    obj = nio.rowtuple_to_json(shift_dft(2))
    obj["d"] = 3
    with pytest.raises(nio.ParseError):
        nio.rowtuple_from_json(obj)


def test_target_roundtrip(rng):
    Y = BlockTarget(cgauss(rng, (2, 3, 2, 2)))
    back = nio.target_from_json(json.loads(nio.dumps(nio.target_to_json(Y))))
    assert np.array_equal(back.blocks, Y.blocks)


def test_bare_matrix_is_single_target():
    Y = nio.target_from_json(nio.matrix_to_json(np.eye(2)))
    assert (Y.s, Y.t, Y.n) == (1, 1, 2)


def test_node_spec():
    X = nio.node_from_json({"kind": "shift-dft", "n": 3})
    assert np.array_equal(X.mats, shift_dft(3).mats)
    assert nio.nodespec_from_json({"kind": "choi-point", "n": 2}) == NodeSpec("choi-point", 2)
    with pytest.raises(nio.ParseError):
        nio.nodespec_from_json({"kind": "nope", "n": 2})
    with pytest.raises(nio.ParseError):
        nio.nodespec_from_json({"kind": "shift-dft", "n": 2, "colour": 1})
    with pytest.raises(nio.ParseError):
        nio.nodespec_from_json({"kind": "weighted-unitaries", "n": 2, "weights": [1, 1]})


def test_read_json_errors(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(nio.ParseError):
        nio.read_json(p)
    with pytest.raises(nio.ParseError):
        nio.read_json(tmp_path / "missing.json")


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        nio.dumps({"x": float("nan")})


def test_float_formatting():
    assert nio.fmt_float(None) == ""
    assert float(nio.fmt_float(0.1)) == 0.1
    assert float(nio.fmt_float(1 / 3)) == 1 / 3


def test_manifest(tmp_path):
    out = tmp_path / "res.json"
    path = nio.write_manifest(out, "verify", {"level": "quick"}, 3, "t0", [str(out)])
    assert path.name == "res.json.manifest.json"
    m = json.loads(path.read_text())
    assert m["config"] == {"level": "quick"} and m["masterSeed"] == 3
    assert m["outputs"] == ["res.json"]
    assert set(m["timestamps"]) == {"started", "finished"}
