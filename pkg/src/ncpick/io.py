"""JSON and CSV serialisation of matrices, nodes, targets, records and manifests.

Matrices are ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in row-major
order. Floats in JSON use Python's shortest round-trip repr; CSV floats use
17 significant digits.
"""
from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import NcPickError
from .pick import BlockTarget, RowTuple
from .zoo import NodeSpec

SEARCH_COLUMNS = ("trialIndex", "seed", "n", "m", "epsilon", "colNormNP", "rowNormNP",
                  "ratio", "elapsed_ms")
TRACE_COLUMNS = ("t", "np_norm", "target_norm", "ratio")


class ParseError(NcPickError, ValueError):
    """Input does not match the JSON schema."""


def _num(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what}: expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ParseError(f"{what}: non-finite number")
    return x


def _int(obj: dict, key: str, where: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ParseError(f"{where}: '{key}' must be a positive integer")
    return v


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ValueError("expected a 2-D array")
    return {"rows": A.shape[0], "cols": A.shape[1], "data": [_pair(z) for z in A.ravel()]}


def matrix_from_json(obj: Any, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    r, c = _int(obj, "rows", where), _int(obj, "cols", where)
    data = obj.get("data")
    if not isinstance(data, list) or len(data) != r * c:
        raise ParseError(f"{where}: 'data' must list {r * c} entries")
    out = np.empty(r * c, dtype=np.complex128)
    for k, e in enumerate(data):
        if isinstance(e, list) and len(e) == 2:
            out[k] = complex(_num(e[0], where), _num(e[1], where))
        else:
            out[k] = _num(e, where)
    return out.reshape(r, c)


def rowtuple_to_json(X) -> dict:
    X = RowTuple.coerce(X)
    return {"n": X.n, "d": X.d, "mats": [matrix_to_json(x) for x in X.mats]}


def rowtuple_from_json(obj: Any) -> RowTuple:
    if not isinstance(obj, dict):
        raise ParseError("node: expected an object")
    n, d = _int(obj, "n", "node"), _int(obj, "d", "node")
    mats = obj.get("mats")
    if not isinstance(mats, list) or len(mats) != d:
        raise ParseError(f"node: 'mats' must list {d} matrices")
    arr = [matrix_from_json(m, f"node.mats[{i}]") for i, m in enumerate(mats)]
    if any(a.shape != (n, n) for a in arr):
        raise ParseError(f"node: every matrix must be {n}x{n}")
    return RowTuple(np.asarray(arr))


def target_to_json(Y: BlockTarget) -> dict:
    return {"s": Y.s, "t": Y.t, "n": Y.n,
            "blocks": [[matrix_to_json(Y.blocks[a, b]) for b in range(Y.t)] for a in range(Y.s)]}


def target_from_json(obj: Any) -> BlockTarget:
    if isinstance(obj, dict) and "data" in obj:
        return BlockTarget.single(matrix_from_json(obj, "target"))
    if not isinstance(obj, dict):
        raise ParseError("target: expected an object")
    s, t, n = _int(obj, "s", "target"), _int(obj, "t", "target"), _int(obj, "n", "target")
    rows = obj.get("blocks")
    if not isinstance(rows, list) or len(rows) != s or any(
            not isinstance(r, list) or len(r) != t for r in rows):
        raise ParseError(f"target: 'blocks' must be a {s}x{t} grid")
    blocks = np.empty((s, t, n, n), dtype=np.complex128)
    for a, r in enumerate(rows):
        for b, m in enumerate(r):
            M = matrix_from_json(m, f"target.blocks[{a}][{b}]")
            if M.shape != (n, n):
                raise ParseError(f"target: block ({a},{b}) must be {n}x{n}")
            blocks[a, b] = M
    return BlockTarget(blocks)


def nodespec_from_json(obj: Any) -> NodeSpec:
    if not isinstance(obj, dict):
        raise ParseError("node spec: expected an object")
    unknown = set(obj) - {"kind", "n", "d", "weights", "epsilon", "seed"}
    if unknown:
        raise ParseError(f"node spec: unknown keys {sorted(unknown)}")
    weights = obj.get("weights")
    if weights is not None:
        if not isinstance(weights, list):
            raise ParseError("node spec: 'weights' must be a list")
        weights = tuple(complex(_num(w[0], "weights"), _num(w[1], "weights"))
                        if isinstance(w, list) else complex(_num(w, "weights")) for w in weights)
    eps = obj.get("epsilon")
    seed = obj.get("seed")
    try:
        return NodeSpec(kind=obj.get("kind"), n=_int(obj, "n", "node spec"),
                        d=obj.get("d"), weights=weights,
                        epsilon=None if eps is None else _num(eps, "epsilon"),
                        seed=seed)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def node_from_json(obj: Any) -> RowTuple:
    """A node given either explicitly (``mats``) or as a spec (``kind``)."""
    if isinstance(obj, dict) and "kind" in obj:
        return nodespec_from_json(obj).build()
    return rowtuple_from_json(obj)


def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def fmt_float(x: float | None) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def record_row(rec) -> list[str]:
    return [str(rec.trialIndex), "" if rec.seed is None else str(rec.seed), str(rec.n),
            str(rec.m), fmt_float(rec.epsilon), fmt_float(rec.colNormNP),
            fmt_float(rec.rowNormNP), fmt_float(rec.ratio), fmt_float(rec.elapsed_ms)]


def record_to_json(rec) -> dict:
    return {
        "trialIndex": rec.trialIndex,
        "seed": rec.seed,
        "n": rec.n,
        "m": rec.m,
        "epsilon": rec.epsilon,
        "rowNormNP": rec.rowNormNP,
        "colNormNP": rec.colNormNP,
        "ratio": rec.ratio,
        "X": rowtuple_to_json(rec.X),
        "Ys": [matrix_to_json(y) for y in rec.Ys],
    }


class CsvLog:
    """Line-buffered CSV writer with a fixed header."""

    def __init__(self, path, columns: Iterable[str]):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(list(columns))

    def write(self, row: Iterable[str]) -> None:
        self._w.writerow(list(row))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace_csv(path, points) -> None:
    with CsvLog(path, TRACE_COLUMNS) as log:
        for p in points:
            log.write([fmt_float(p.t), fmt_float(p.np_norm), fmt_float(p.target_norm),
                       fmt_float(p.ratio)])


def tool_version() -> str:
    from . import __version__

    return __version__


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".manifest.json")


def write_manifest(output, command: str, config: dict, seed: int | None, started: str,
                   outputs: Iterable[str] = ()) -> Path:
    """Write ``<output>.manifest.json`` describing how to regenerate ``output``."""
    path = manifest_path(output)
    write_json(path, {
        "command": command,
        "config": config,
        "toolVersion": tool_version(),
        "masterSeed": seed,
        "outputs": [os.path.basename(o) for o in outputs],
        "timestamps": {"started": started, "finished": now_iso()},
    })
    return path
