"""Deterministic choice of interpolation targets from the spectrum of ``P_X``."""
from __future__ import annotations

import numpy as np

from .errors import RankTooSmall
from .pick import PickBundle
from .tensor import unvec

PHASE_FLOOR = 1e-12
TIE_TOL = 1e-10
KEY_DECIMALS = 8
ORIENTATIONS = ("transpose", "literal")


def phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its first entry of modulus above ``1e-12`` is real positive."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    big = np.flatnonzero(np.abs(v) > PHASE_FLOOR)
    if big.size == 0:
        return v.copy()
    lead = v[big[0]]
    return v * (np.conj(lead) / abs(lead))


def _key(v: np.ndarray) -> tuple:
    r = np.round(np.column_stack([v.real, v.imag]), KEY_DECIMALS) + 0.0
    return tuple(r.ravel())


def vector_to_target(v: np.ndarray, n: int, orientation: str = "transpose") -> np.ndarray:
    """``literal``: ``unvec(v)`` (column stacking). ``transpose``: its transpose."""
    if orientation == "literal":
        return unvec(v, n)
    if orientation == "transpose":
        return np.asarray(v).reshape(n, n).copy()
    raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")


def eigen_target_select(B: PickBundle, m: int, orientation: str = "transpose",
                        tie_tol: float = TIE_TOL) -> list[np.ndarray]:
    """``m`` targets from eigenvectors of ``P_X`` with the smallest kept eigenvalues.

    Kept eigenvalues exceed ``rankTol * lambda_max``. Eigenvectors are phase
    normalised; runs of eigenvalues within ``tie_tol * lambda_max`` of their
    neighbour are ordered lexicographically by (real, imag) entries.
    """
    if m < 1:
        raise ValueError("m must be positive")
    w, V = B.eigvals, B.eigvecs
    top = w[-1]
    idx = np.flatnonzero(w > B.rankTol * top)
    if idx.size < m:
        raise RankTooSmall(f"only {idx.size} positive eigenvalues, {m} targets requested")
    vecs = [phase_normalize(V[:, k]) for k in idx]
    vals = w[idx]
    order: list[int] = []
    start = 0
    while start < len(idx) and len(order) < m:
        stop = start + 1
        while stop < len(idx) and vals[stop] - vals[stop - 1] <= tie_tol * top:
            stop += 1
        order.extend(sorted(range(start, stop), key=lambda j: _key(vecs[j])))
        start = stop
    n = B.n
    return [vector_to_target(vecs[j], n, orientation) for j in order[:m]]
