"""Boomerang matrices, the defect of a row contraction, and the mini-dilation
isometry ``V_X = (P_X^{1/2} (x) I_n (x) Delta_X^{1/2}) B_n``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .errors import IdentityViolation, IsometryFailure
from .ncpoly import NcPoly, eval_poly
from .pick import PickBundle, RowTuple, pick_matrix

SANDWICH_TOL = 1e-10
ISOMETRY_TOL = 1e-8
PROJECTION_TOL = 1e-9
COMPRESSION_TOL = 1e-8
DEFAULT_MAX_N = 12


def boomerang(n: int) -> np.ndarray:
    """``sum_ij e_i (x) e_j (x) E_ij`` as an ``n^3 x n`` 0/1 matrix.

    Column ``j`` has its ones at rows ``(i, j, i)`` for every ``i``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    B = np.zeros((n ** 3, n))
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    B[(i * n * n + j * n + i).ravel(), j.ravel()] = 1.0
    return B


def ampliated_boomerang(n: int, r: int) -> np.ndarray:
    """``(sum_ij e_i (x) e_j (x) I_r (x) E_ij) Q_{n,r}``, an ``n^3 r x n r`` 0/1 matrix."""
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive")
    core = np.zeros((n * n * r * n, r * n))
    for i in range(n):
        for j in range(n):
            for k in range(r):
                core[((i * n + j) * r + k) * n + i, k * n + j] = 1.0
    return core @ tensor.commutation_matrix(n, r)


def boomerang_sandwich(A, C, D, tol: float = SANDWICH_TOL) -> np.ndarray:
    """``B^T (A (x) CD) B``, checked against ``B^T ([(C^T (x) I) A (D^T (x) I)] (x) I) B``."""
    A = np.asarray(A, dtype=np.complex128)
    C = np.asarray(C, dtype=np.complex128)
    D = np.asarray(D, dtype=np.complex128)
    n = C.shape[0]
    if A.shape != (n * n, n * n) or C.shape != (n, n) or D.shape != (n, n):
        raise ValueError("need A in M_{n^2} and C, D in M_n")
    B = boomerang(n)
    eye = np.eye(n)
    lhs = B.T @ np.kron(A, C @ D) @ B
    rhs = B.T @ np.kron(np.kron(C.T, eye) @ A @ np.kron(D.T, eye), eye) @ B
    err = float(np.max(np.abs(lhs - rhs)))
    scale = max(1.0, float(np.max(np.abs(lhs))))
    if err > tol * scale:
        raise IdentityViolation(f"boomerang exchange residual {err:.3e}")
    return lhs


def psd_sqrt(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


@dataclass(frozen=True, eq=False)
class DilationData:
    X: RowTuple = field(repr=False)
    bundle: PickBundle = field(repr=False)
    Delta: np.ndarray = field(repr=False)
    sqrtDelta: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    Xtilde: np.ndarray = field(repr=False)
    isometry_residual: float = 0.0


def dilation_data(X, B: PickBundle | None = None, max_n: int = DEFAULT_MAX_N) -> DilationData:
    """Defect, isometry ``V_X`` and compressed tuple ``P^{+/2} (I (x) X_i) P^{1/2}``."""
    X = RowTuple.coerce(X)
    n = X.n
    if n > max_n:
        raise ValueError(f"n = {n} exceeds max_n = {max_n} (V_X has n^4 rows); raise max_n")
    B = pick_matrix(X) if B is None else B
    Delta = np.eye(n) - X.gram()
    Delta = 0.5 * (Delta + Delta.conj().T)
    if np.linalg.eigvalsh(Delta)[0] < -1e-10:
        raise IsometryFailure("defect I - sum X_i X_i^* is not PSD")
    sqrtDelta = psd_sqrt(Delta)
    V = np.kron(np.kron(B.sqrtP, np.eye(n)), sqrtDelta) @ ampliated_boomerang(n, n)
    resid = float(np.linalg.norm(V.conj().T @ V - np.eye(n * n), 2))
    if resid > ISOMETRY_TOL:
        raise IsometryFailure(f"||V*V - I|| = {resid:.3e}")
    eye = np.eye(n)
    Xt = np.asarray([B.pinvSqrtP @ np.kron(eye, x) @ B.sqrtP for x in X.mats])
    return DilationData(X, B, Delta, sqrtDelta, V, Xt, resid)


def projection_residual(B: PickBundle, W: np.ndarray) -> float:
    """``||Q_X (I (x) W) P_X - (I (x) W) P_X||``; zero for ``W`` in the node's algebra."""
    n = W.shape[0]
    WP = np.kron(np.eye(n), W) @ B.P
    return float(np.linalg.norm(B.projQ @ WP - WP, 2))


def mini_dilation_check(D: DilationData, alpha: NcPoly, beta: NcPoly) -> float:
    """``||V^* (alpha(Xt) beta(Xt)^* (x) I_{n^2}) V - alpha(X) beta(X)^* (x) I_n||``.

    Also asserts the compression identity ``alpha(Xt) Q_X = P^{+/2} (I (x) alpha(X)) P^{1/2}``
    and the projection identity for ``alpha(X)`` and ``beta(X)``.
    """
    n = D.X.n
    aX, bX = eval_poly(alpha, D.X), eval_poly(beta, D.X)
    aT, bT = eval_poly(alpha, D.Xtilde), eval_poly(beta, D.Xtilde)
    B = D.bundle
    eye = np.eye(n)
    for W, Wt in ((aX, aT), (bX, bT)):
        scale = max(1.0, float(np.linalg.norm(W, 2)))
        pr = projection_residual(B, W)
        if pr > PROJECTION_TOL * scale * max(1.0, float(np.linalg.norm(B.P, 2))):
            raise IdentityViolation(f"projection identity residual {pr:.3e}")
        cr = float(np.linalg.norm(Wt @ B.projQ - B.pinvSqrtP @ np.kron(eye, W) @ B.sqrtP, 2))
        # products of compressed letters amplify rounding by up to cond(P_X)
        if cr > COMPRESSION_TOL * scale * B.condition() ** 2:
            raise IdentityViolation(f"compression identity residual {cr:.3e}")
    lhs = D.V.conj().T @ np.kron(aT @ bT.conj().T, np.eye(n * n)) @ D.V
    rhs = np.kron(aX @ bX.conj().T, eye)
    return float(np.linalg.norm(lhs - rhs, 2))
