"""Index-level tensor primitives: vec, Kronecker products, the psi involution,
Choi and commutation matrices, and tensor-leg permutations.

Conventions (0-based throughout):

* ``vec`` stacks columns, so ``vec(A)[n*j + i] == A[i, j]`` for ``A`` with
  ``n`` rows.
* ``kron`` is the standard Kronecker product: in ``A (x) B`` the left factor
  indexes the slow (outer) position.
* For ``A`` of side ``n**2`` a row index ``n*a + b`` is read as the leg pair
  ``(a, b)``; ``psi`` swaps the outer row leg with the inner column leg.
"""
from __future__ import annotations

from math import isqrt
from typing import Sequence

import numpy as np

from .errors import DimensionError


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def vec(a) -> np.ndarray:
    """Stack the columns of ``a`` into an ``(n*m, 1)`` column.

    >>> vec([[1, 2], [3, 4]]).ravel().real
    array([1., 3., 2., 4.])
    """
    a = np.asarray(a)
    return a.T.reshape(-1, 1)


def unvec(v, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v)
    size = v.size
    if n is None:
        n = isqrt(size)
    if n * n != size:
        raise DimensionError(f"vector of length {size} is not vec of an {n}x{n} matrix")
    return v.reshape(n, n).T


def kron(a, b) -> np.ndarray:
    return np.kron(a, b)


def _square_side(a: np.ndarray) -> int:
    rows, cols = a.shape
    n = isqrt(rows)
    if rows != cols or n * n != rows:
        raise DimensionError(f"expected an n^2 x n^2 matrix, got {a.shape}")
    return n


def psi(a) -> np.ndarray:
    """The psi involution on ``M_{n^2}``.

    On matrix units ``E_ij (x) E_kl -> E_lj (x) E_ki``; on rank-one Kronecker
    products ``C (x) D -> vec(D) vec(C)^T``. Implemented as a pure entry
    permutation, so ``psi(psi(a))`` reproduces ``a`` bit for bit.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError(f"psi expects a 2-D array, got shape {a.shape}")
    n = _square_side(a)
    # a4[i, k, j, l] = a[(i,k), (j,l)]  ->  out4[l, k, j, i]
    return a.reshape(n, n, n, n).transpose(3, 1, 2, 0).reshape(n * n, n * n)


def choi_matrix(n: int) -> np.ndarray:
    """``sum_{ij} E_ij (x) E_ij``, the unnormalised maximally entangled projector times n."""
    if n < 1:
        raise ValueError("n must be positive")
    diag = np.arange(n) * (n + 1)
    c = np.zeros((n * n, n * n), dtype=np.complex128)
    c[np.ix_(diag, diag)] = 1.0
    return c


def commutation_matrix(n: int, s: int) -> np.ndarray:
    """Permutation ``Q`` with ``Q (U (x) V) Q^T = V (x) U`` for ``U`` n x n, ``V`` s x s.

    Equivalently ``Q (u (x) v) = v (x) u``.
    """
    if n < 1 or s < 1:
        raise ValueError("dimensions must be positive")
    q = np.zeros((n * s, n * s))
    a, b = np.meshgrid(np.arange(n), np.arange(s), indexing="ij")
    q[(b * n + a).ravel(), (a * s + b).ravel()] = 1.0
    return q


def _check_shape(dims: Sequence[int], size: int, what: str) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise DimensionError(f"{what} leg dimensions must be positive: {dims}")
    if int(np.prod(dims)) != size:
        raise DimensionError(f"{what} legs {dims} do not multiply to {size}")
    return dims


def leg_permute(a, row_shape: Sequence[int], col_shape: Sequence[int],
                perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor legs of ``a``.

    ``row_shape``/``col_shape`` give the factor dimensions of the row and
    column spaces. ``perm`` follows :func:`numpy.transpose`: output leg ``i`` is
    input leg ``perm[i]``, applied identically to rows and columns. Swapping
    the legs of ``A (x) B`` with ``perm=(1, 0)`` yields ``B (x) A``.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("leg_permute expects a 2-D array")
    row_shape = _check_shape(row_shape, a.shape[0], "row")
    col_shape = _check_shape(col_shape, a.shape[1], "column")
    k = len(row_shape)
    perm = tuple(int(p) for p in perm)
    if len(col_shape) != k or sorted(perm) != list(range(k)):
        raise DimensionError(f"perm {perm} is not a permutation of {k} legs")
    t = a.reshape(row_shape + col_shape).transpose(perm + tuple(k + p for p in perm))
    return t.reshape(a.shape)


def inverse_perm(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)
