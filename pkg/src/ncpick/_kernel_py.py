"""Pure-Python implementation of the batch column-row kernel."""
from __future__ import annotations

import numpy as np

from .errors import NotHermitian, NotPSD, RankTooSmall, SingularResolvent
from .pick import BlockTarget, RowTuple, Tolerances, conjugated_blocks, pick_matrix
from .selection import eigen_target_select

OK, SINGULAR, NOT_HERMITIAN, NOT_PSD, RANK_TOO_SMALL, TIE, LAPACK_FAIL = range(7)


def _top_singular(blocks: np.ndarray) -> float:
    s, t, k, _ = blocks.shape
    return float(np.linalg.norm(blocks.transpose(0, 2, 1, 3).reshape(s * k, t * k), 2))


def colrow_trial(X, m: int, rank_tol: float = 1e-10, psd_tol: float = 1e-9,
                 transpose: bool = True):
    """``(row, col, status, Ys)`` for one node; norms are NaN unless status is OK."""
    X = RowTuple.coerce(X)
    try:
        B = pick_matrix(X, Tolerances(rank_tol=rank_tol, psd_tol=psd_tol))
        Ys = eigen_target_select(B, m, "transpose" if transpose else "literal")
    except SingularResolvent:
        return np.nan, np.nan, SINGULAR, None
    except NotHermitian:
        return np.nan, np.nan, NOT_HERMITIAN, None
    except NotPSD:
        return np.nan, np.nan, NOT_PSD, None
    except RankTooSmall:
        return np.nan, np.nan, RANK_TOO_SMALL, None
    except np.linalg.LinAlgError:
        return np.nan, np.nan, LAPACK_FAIL, None
    row = _top_singular(conjugated_blocks(B, BlockTarget.row(Ys)))
    col = _top_singular(conjugated_blocks(B, BlockTarget.column(Ys)))
    return row, col, OK, np.asarray(Ys)


def colrow_batch(X, m: int, rank_tol: float = 1e-10, psd_tol: float = 1e-9,
                 herm_tol: float = 1e-10, tie_tol: float = 1e-10, transpose: bool = True):
    """Same contract as the compiled kernel; ties are resolved here, never reported."""
    X = np.asarray(X, dtype=np.complex128)
    nb, _, n, _ = X.shape
    row = np.full(nb, np.nan)
    col = np.full(nb, np.nan)
    status = np.zeros(nb, dtype=np.int32)
    Ys = np.zeros((nb, m, n, n), dtype=np.complex128)
    for b in range(nb):
        r, c, st, y = colrow_trial(X[b], m, rank_tol, psd_tol, transpose)
        row[b], col[b], status[b] = r, c, st
        if y is not None:
            Ys[b] = y
    return row, col, status, Ys
