"""The elementary Pick matrix and the interpolation criteria built on it.

For a row contraction ``X = (X_1, ..., X_d)`` of ``n x n`` matrices the
elementary Pick matrix is ``P_X = psi((I - T)^{-1})`` with transfer matrix
``T = sum_i conj(X_i) (x) X_i``. Equivalently ``P_X = sum_w vec(X^w) vec(X^w)^*``,
so ``P_X`` is PSD and its range is ``vec(alg_X)``.

Leg convention for block targets: a target ``Y`` in ``M_{s x t} (x) M_n`` is
stored as its grid of ``n x n`` blocks. Criterion matrices live on
``H_choi (x) H_space (x) H_block`` (dimensions ``n, n, s``); in that ordering
the target acts as ``I_n (x) Yhat`` with ``Yhat = sum_ab Y_ab (x) E_ab`` on
``H_space (x) H_block``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from . import tensor
from .errors import (
    DimensionError,
    NotHermitian,
    NotInAlgebra,
    NotInCommutant,
    NotInvertible,
    NotPSD,
    SingularResolvent,
)
from .ncpoly import level_products

BOUNDARY_MARGIN = 1e-12
HERMITIAN_TOL = 1e-10
COMMUTANT_TOL = 1e-8


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = 1e-10
    psd_tol: float = 1e-9
    series_tail: float = 1e-8

    def __post_init__(self):
        if min(self.rank_tol, self.psd_tol, self.series_tail) <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class RowTuple:
    """A d-tuple of n x n complex matrices, stored as a ``(d, n, n)`` array."""

    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=np.complex128)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[0] < 1:
            raise DimensionError(f"expected shape (d, n, n), got {mats.shape}")
        if mats.shape[1] < 1:
            raise DimensionError("matrices must be non-empty")
        if not np.all(np.isfinite(mats)):
            raise ValueError("row tuple has non-finite entries")
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def coerce(cls, X) -> "RowTuple":
        return X if isinstance(X, RowTuple) else cls(np.asarray([np.asarray(m) for m in X]))

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    def __len__(self) -> int:
        return self.d

    def __getitem__(self, i: int) -> np.ndarray:
        return self.mats[i]

    def __iter__(self):
        return iter(self.mats)

    def scaled(self, t: complex) -> "RowTuple":
        return RowTuple(t * self.mats)

    def conjugated(self, U: np.ndarray) -> "RowTuple":
        """Simultaneous conjugation ``U^* X_i U``."""
        return RowTuple(np.einsum("ji,ajk,kl->ail", U.conj(), self.mats, U))

    def gram(self) -> np.ndarray:
        """``sum_i X_i X_i^*``."""
        return np.einsum("aij,akj->ik", self.mats, self.mats.conj())


@dataclass(frozen=True, eq=False)
class BlockTarget:
    """An ``s x t`` grid of ``n x n`` blocks, stored as an ``(s, t, n, n)`` array."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=np.complex128)
        if b.ndim == 2:
            b = b[None, None]
        if b.ndim != 4 or b.shape[2] != b.shape[3] or min(b.shape) < 1:
            raise DimensionError(f"expected shape (s, t, n, n), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("target has non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def single(cls, Y) -> "BlockTarget":
        return cls(np.asarray(Y)[None, None])

    @classmethod
    def row(cls, Ys: Sequence) -> "BlockTarget":
        """``[Y_1 Y_2 ... Y_m]`` (s = 1, t = m)."""
        return cls(np.asarray([list(Ys)]))

    @classmethod
    def column(cls, Ys: Sequence) -> "BlockTarget":
        """``[Y_1; Y_2; ...; Y_m]`` (s = m, t = 1)."""
        return cls(np.asarray([[y] for y in Ys]))

    @classmethod
    def from_matrix(cls, Y, n: int) -> "BlockTarget":
        """Split an ``sn x tn`` block matrix into its ``n x n`` blocks."""
        Y = np.asarray(Y)
        if Y.shape[0] % n or Y.shape[1] % n:
            raise DimensionError(f"{Y.shape} is not a grid of {n}x{n} blocks")
        s, t = Y.shape[0] // n, Y.shape[1] // n
        return cls(Y.reshape(s, n, t, n).transpose(0, 2, 1, 3))

    @property
    def s(self) -> int:
        return self.blocks.shape[0]

    @property
    def t(self) -> int:
        return self.blocks.shape[1]

    @property
    def n(self) -> int:
        return self.blocks.shape[2]

    def matrix(self) -> np.ndarray:
        """The ``sn x tn`` block matrix ``sum_ab E_ab (x) Y_ab``."""
        s, t, n = self.s, self.t, self.n
        return self.blocks.transpose(0, 2, 1, 3).reshape(s * n, t * n)

    def hat(self) -> np.ndarray:
        """``sum_ab Y_ab (x) E_ab``: the target on ``H_space (x) H_block``."""
        return tensor.leg_permute(self.matrix(), (self.s, self.n), (self.t, self.n), (1, 0))

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix(), 2))

    def scaled(self, c: complex) -> "BlockTarget":
        return BlockTarget(c * self.blocks)


@dataclass(frozen=True, eq=False)
class PickBundle:
    """``P_X`` with its square root, root pseudoinverse and range projection."""

    P: np.ndarray
    sqrtP: np.ndarray
    pinvSqrtP: np.ndarray
    projQ: np.ndarray
    rank: int
    rankTol: float
    psdTol: float
    eigvals: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)
    X: RowTuple | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return isqrt(self.P.shape[0])

    @property
    def full_rank(self) -> bool:
        return self.rank == self.P.shape[0]

    def condition(self) -> float:
        """``sqrt(lambda_max / lambda_min)`` over the range of ``P``."""
        kept = self.eigvals[self.eigvals > self.rankTol * self.eigvals[-1]]
        return float(np.sqrt(kept[-1] / kept[0]))


def row_norm(X) -> float:
    """``||sum_i X_i X_i^*||^{1/2}``."""
    X = RowTuple.coerce(X)
    top = np.linalg.eigvalsh(X.gram())[-1]
    return float(np.sqrt(max(top, 0.0)))


def transfer(X) -> np.ndarray:
    """``T = sum_i conj(X_i) (x) X_i``."""
    X = RowTuple.coerce(X)
    n = X.n
    # kron(A, B)[(i,k),(j,l)] = A[i,j] B[k,l]
    t4 = np.einsum("aij,akl->ikjl", X.mats.conj(), X.mats)
    return t4.reshape(n * n, n * n)


def resolvent(X) -> np.ndarray:
    """``(I - T)^{-1}`` by LU with partial pivoting."""
    X = RowTuple.coerce(X)
    if row_norm(X) >= 1.0 - BOUNDARY_MARGIN:
        raise SingularResolvent(
            f"row norm {row_norm(X):.15g} is not below 1 - {BOUNDARY_MARGIN:g}; "
            "P_X is undefined on the boundary of the row ball")
    n2 = X.n * X.n
    A = np.eye(n2, dtype=np.complex128) - transfer(X)
    lu, piv = sla.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= np.finfo(float).eps * np.max(np.abs(np.diag(lu))):
        raise SingularResolvent("I - T is numerically singular")
    return sla.lu_solve((lu, piv), np.eye(n2, dtype=np.complex128), check_finite=False)


def bundle_from_matrix(P, tol: Tolerances = DEFAULT_TOL, X=None) -> PickBundle:
    """Spectral data of a Hermitian PSD matrix in :class:`PickBundle` form."""
    P = np.asarray(P, dtype=np.complex128)
    scale = np.max(np.abs(P))
    asym = np.max(np.abs(P - P.conj().T))
    if asym > HERMITIAN_TOL * max(scale, 1.0):
        raise NotHermitian(f"relative asymmetry {asym / max(scale, 1.0):.3e} exceeds {HERMITIAN_TOL:g}")
    P = 0.5 * (P + P.conj().T)
    w, V = np.linalg.eigh(P)
    top = w[-1]
    if top <= 0:
        raise NotPSD("matrix has no positive eigenvalue")
    if w[0] < -tol.psd_tol * top:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -{tol.psd_tol:g} * {top:.3e}")
    keep = w > tol.rank_tol * top
    root = np.sqrt(np.clip(w, 0.0, None))
    sqrtP = (V * root) @ V.conj().T
    Vk = V[:, keep]
    pinv = (Vk / root[keep]) @ Vk.conj().T
    Q = Vk @ Vk.conj().T
    return PickBundle(P=P, sqrtP=sqrtP, pinvSqrtP=pinv, projQ=Q, rank=int(keep.sum()),
                      rankTol=tol.rank_tol, psdTol=tol.psd_tol, eigvals=w, eigvecs=V,
                      X=None if X is None else RowTuple.coerce(X))


def pick_matrix(X, tol: Tolerances = DEFAULT_TOL) -> PickBundle:
    """Build ``P_X = psi((I - T)^{-1})`` and its spectral data."""
    X = RowTuple.coerce(X)
    return bundle_from_matrix(tensor.psi(resolvent(X)), tol, X)


def pick_series(X, L: int) -> np.ndarray:
    """Truncated resolvent series ``sum_{|w| <= L} conj(X^w) (x) X^w``.

    Built from explicit word products only (no inverse, no psi), so
    ``psi(pick_series(X, L))`` is an independent approximation of ``P_X``.
    """
    X = RowTuple.coerce(X)
    n, d = X.n, X.d
    if L < 0:
        raise ValueError("L must be non-negative")
    if d ** L * n * n > 1 << 24:
        raise ValueError("word expansion too large; use choi_series")
    out = np.zeros((n * n, n * n), dtype=np.complex128)
    for level in level_products(X, L):
        out += np.einsum("wij,wkl->ikjl", level.conj(), level).reshape(n * n, n * n)
    return out


def choi_series(X, L: int) -> np.ndarray:
    """``sum_{|w| <= L} (I (x) X^w) C_n (I (x) X^w)^*``, a truncation of ``P_X`` itself.

    Computed level by level via ``S -> sum_i (I (x) X_i) S (I (x) X_i)^*``,
    so the cost is linear in ``L`` rather than exponential.
    """
    X = RowTuple.coerce(X)
    n = X.n
    if L < 0:
        raise ValueError("L must be non-negative")
    lifts = np.asarray([np.kron(np.eye(n), x) for x in X.mats])
    S = tensor.choi_matrix(n)
    out = S.copy()
    for _ in range(L):
        S = np.einsum("aij,jk,alk->il", lifts, S, lifts.conj())
        out += S
    return out


def series_tail_bound(X, L: int) -> float:
    """Bound ``n r^{L+1} / (1 - r)``, ``r = row_norm(X)^2``, on ``||P_X - choi_series(X, L)||``."""
    X = RowTuple.coerce(X)
    r = row_norm(X) ** 2
    if r >= 1:
        return float("inf")
    return X.n * r ** (L + 1) / (1 - r)


class Membership(NamedTuple):
    member: bool
    residual: float


def alg_member(Z, B: PickBundle, tol: Tolerances | None = None) -> Membership:
    """Is ``Z`` in the unital algebra generated by the node? (``vec(Z)`` in ``ran P_X``)."""
    rank_tol = B.rankTol if tol is None else tol.rank_tol
    z = tensor.vec(np.asarray(Z, dtype=np.complex128))
    if z.shape[0] != B.P.shape[0]:
        raise DimensionError(f"matrix of size {z.shape[0]} does not match P of side {B.P.shape[0]}")
    resid = float(np.linalg.norm(z - B.projQ @ z))
    return Membership(resid <= rank_tol * float(np.linalg.norm(z)), resid)


def alg_residuals(B: PickBundle, Y: BlockTarget, tol: Tolerances | None = None):
    """``[((a, b), residual, member), ...]`` for every block of ``Y``."""
    out = []
    for a in range(Y.s):
        for b in range(Y.t):
            m = alg_member(Y.blocks[a, b], B, tol)
            out.append(((a, b), m.residual, m.member))
    return out


def require_alg(B: PickBundle, Y: BlockTarget, tol: Tolerances | None = None) -> None:
    bad = [(ab, r) for ab, r, ok in alg_residuals(B, Y, tol) if not ok]
    if bad:
        raise NotInAlgebra(bad)


def _check_target(B: PickBundle, Y: BlockTarget) -> int:
    n = Y.n
    if n * n != B.P.shape[0]:
        raise DimensionError(f"target blocks are {n}x{n} but P has side {B.P.shape[0]}")
    return n


def criterion_matrix(B: PickBundle, Y: BlockTarget) -> np.ndarray:
    """``P (x) I_s - (I_n (x) Yhat)(P (x) I_t)(I_n (x) Yhat)^*``, Hermitian by construction."""
    n = _check_target(B, Y)
    lift = np.kron(np.eye(n), Y.hat())
    K = np.kron(B.P, np.eye(Y.s)) - lift @ np.kron(B.P, np.eye(Y.t)) @ lift.conj().T
    return 0.5 * (K + K.conj().T)


class Feasibility(NamedTuple):
    feasible: bool
    margin: float
    range_margin: float
    alg_residuals: list


def feasible(B: PickBundle, Y: BlockTarget, tol: Tolerances | None = None) -> Feasibility:
    """Does an interpolant of norm at most 1 exist?

    ``margin`` is ``lambda_min`` of the criterion matrix; ``range_margin`` is
    the same on ``ran(Q_X) (x) C^s``, where the criterion matrix is supported
    (the complement only contributes structural zeros).
    """
    tol = tol or Tolerances(rank_tol=B.rankTol, psd_tol=B.psdTol)
    resid = alg_residuals(B, Y, tol)
    bad = [(ab, r) for ab, r, ok in resid if not ok]
    if bad:
        raise NotInAlgebra(bad)
    K = criterion_matrix(B, Y)
    w = np.linalg.eigvalsh(K)
    margin = float(w[0])
    basis = np.kron(B.eigvecs[:, B.eigvals > B.rankTol * B.eigvals[-1]], np.eye(Y.s))
    range_margin = float(np.linalg.eigvalsh(basis.conj().T @ K @ basis)[0])
    scale = max(1.0, float(np.max(np.abs(w))))
    ok = margin >= -tol.psd_tol * scale
    return Feasibility(ok, margin, range_margin, [(ab, r) for ab, r, _ in resid])


def conjugated_target(B: PickBundle, Y: BlockTarget, check: bool = True) -> np.ndarray:
    """``(P^{+/2} (x) I_s)(I_n (x) Yhat)(P^{1/2} (x) I_t)``."""
    n = _check_target(B, Y)
    if check:
        require_alg(B, Y)
    lift = np.kron(np.eye(n), Y.hat())
    return np.kron(B.pinvSqrtP, np.eye(Y.s)) @ lift @ np.kron(B.sqrtP, np.eye(Y.t))


def conjugated_blocks(B: PickBundle, Y: BlockTarget) -> np.ndarray:
    """``[P^{+/2} (I_n (x) Y_ab) P^{1/2}]_ab`` as an ``(s, t, n^2, n^2)`` array.

    Arranged as a block matrix this is a row/column permutation of
    :func:`conjugated_target`, so it has the same singular values.
    """
    n = _check_target(B, Y)
    eye = np.eye(n)
    lifts = np.einsum("ij,abkl->abikjl", eye, Y.blocks).reshape(Y.s, Y.t, n * n, n * n)
    return B.pinvSqrtP @ lifts @ B.sqrtP


def np_norm(B: PickBundle, Y: BlockTarget, check: bool = True) -> float:
    """Minimal H-infinity norm of an interpolant ``f(X) = Y``."""
    _check_target(B, Y)
    if check:
        require_alg(B, Y)
    M = conjugated_blocks(B, Y)
    s, t, k, _ = M.shape
    return float(np.linalg.norm(M.transpose(0, 2, 1, 3).reshape(s * k, t * k), 2))


def check_commutant(D, X, rtol: float = COMMUTANT_TOL) -> float:
    """Largest ``||D (I (x) X_i) - (I (x) X_i) D||`` relative to ``||D||``; raise if too big."""
    X = RowTuple.coerce(X)
    D = np.asarray(D, dtype=np.complex128)
    eye = np.eye(X.n)
    worst = 0.0
    for x in X.mats:
        lift = np.kron(eye, x)
        worst = max(worst, float(np.linalg.norm(D @ lift - lift @ D, 2)))
    rel = worst / max(float(np.linalg.norm(D, 2)), np.finfo(float).tiny)
    if rel > rtol:
        raise NotInCommutant(f"commutator residual {rel:.3e} exceeds {rtol:g}")
    return rel


def preconditioned_bundle(B: PickBundle, D) -> PickBundle:
    """Spectral data of ``D P_X D^*`` for ``D`` in the commutant of ``{I (x) X_i}``."""
    if B.X is None:
        raise ValueError("bundle does not carry its node; build it with pick_matrix")
    D = np.asarray(D, dtype=np.complex128)
    if D.shape != B.P.shape:
        raise DimensionError(f"preconditioner shape {D.shape} does not match P {B.P.shape}")
    check_commutant(D, B.X)
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise NotInvertible(f"preconditioner has singular value ratio {sv[-1] / sv[0]:.3e}")
    DPD = D @ B.P @ D.conj().T
    return bundle_from_matrix(DPD, Tolerances(rank_tol=B.rankTol, psd_tol=B.psdTol), B.X)


def np_norm_preconditioned(B: PickBundle, Y: BlockTarget, D) -> float:
    """NP norm through ``Q_{X,D} = (D P_X D^*)^{1/2}``; same value, different conditioning."""
    D = np.asarray(D, dtype=np.complex128)
    if D.shape == B.P.shape and np.array_equal(D, np.eye(D.shape[0])):
        return np_norm(B, Y)
    require_alg(B, Y)
    return np_norm(preconditioned_bundle(B, D), Y, check=False)
