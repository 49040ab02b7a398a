"""Backend selection for the batch column-row kernel.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. Trials the compiled kernel flags as eigenvalue ties are
recomputed by the Python path, which owns the tie-breaking rule.
"""
from __future__ import annotations

import numpy as np

from . import _kernel_py
from ._kernel_py import (LAPACK_FAIL, NOT_HERMITIAN, NOT_PSD, OK, RANK_TOO_SMALL,
                         SINGULAR, TIE)

try:
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

BACKENDS = ("auto", "compiled", "python")
STATUS_NAMES = {OK: "ok", SINGULAR: "singular-resolvent", NOT_HERMITIAN: "not-hermitian",
                NOT_PSD: "not-psd", RANK_TOO_SMALL: "rank-too-small", TIE: "eigenvalue-tie",
                LAPACK_FAIL: "lapack-failure"}


def compiled_available() -> bool:
    return _compiled is not None


def resolve_backend(name: str = "auto") -> str:
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {name!r}")
    if name == "auto":
        return "compiled" if _compiled is not None else "python"
    if name == "compiled" and _compiled is None:
        raise ImportError("compiled kernel is not built")
    return name


def colrow_batch(X, m: int, *, backend: str = "auto", rank_tol: float = 1e-10,
                 psd_tol: float = 1e-9, transpose: bool = True):
    """Row/column NP norms for nodes ``X`` of shape ``(B, d, n, n)``.

    Returns ``(row, col, status, Ys)``; see :data:`STATUS_NAMES`.
    """
    X = np.ascontiguousarray(X, dtype=np.complex128)
    if resolve_backend(backend) == "python":
        return _kernel_py.colrow_batch(X, m, rank_tol, psd_tol, transpose=transpose)
    row, col, status, Ys = _compiled.colrow_batch(X, m, rank_tol, psd_tol, 1e-10, 1e-10,
                                                  transpose)
    for b in np.flatnonzero(status == TIE):
        r, c, st, y = _kernel_py.colrow_trial(X[b], m, rank_tol, psd_tol, transpose)
        row[b], col[b], status[b] = r, c, st
        if y is not None:
            Ys[b] = y
    bad = status != OK
    row[bad] = np.nan
    col[bad] = np.nan
    return row, col, status, Ys
