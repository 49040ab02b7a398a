"""Example nodes: shift/diagonal pairs, weighted unitaries, the Choi point and
normalised random row contractions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadWeights, NotUnitary
from .pick import RowTuple
from .tensor import choi_matrix

UNITARY_TOL = 1e-10
WEIGHT_TOL = 1e-10
KINDS = ("shift-dft", "weighted-unitaries", "choi-point", "random-normalized")


def shift_matrix(n: int) -> np.ndarray:
    """Cyclic shift ``S e_i = e_{i+1 mod n}``."""
    return np.roll(np.eye(n, dtype=np.complex128), 1, axis=0)


def clock_matrix(n: int) -> np.ndarray:
    """``diag(w, w^2, ..., w^n)`` with ``w = exp(2 pi i / n)``, each entry from its angle."""
    k = np.arange(1, n + 1) % n
    return np.diag(np.exp(2j * np.pi * k / n))


def shift_dft(n: int) -> RowTuple:
    """``(S / sqrt 2, M / sqrt 2)``: an irreducible row co-isometry."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return RowTuple(np.asarray([shift_matrix(n), clock_matrix(n)]) / np.sqrt(2))


def choi_point(n: int) -> RowTuple:
    """``E_ij / sqrt n`` for ``1 <= i, j <= n`` in lexicographic order (d = n^2)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    mats = np.zeros((n * n, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            mats[i * n + j, i, j] = 1.0 / np.sqrt(n)
    return RowTuple(mats)


def choi_point_pick(n: int, t: float) -> np.ndarray:
    """Closed form ``P_{tX} = C_n + t^2 / (n (1 - t^2)) I`` at the Choi point."""
    if not 0 <= t < 1:
        raise ValueError("need 0 <= t < 1")
    return choi_matrix(n) + t * t / (n * (1 - t * t)) * np.eye(n * n)


def weighted_unitaries(unitaries: Sequence, weights: Sequence[complex]) -> RowTuple:
    """``(w_1 U_1, ..., w_d U_d)`` for unitaries ``U_i`` and unit-norm nonzero weights."""
    us = np.asarray([np.asarray(u, dtype=np.complex128) for u in unitaries])
    w = np.asarray(weights, dtype=np.complex128)
    if us.ndim != 3 or us.shape[1] != us.shape[2]:
        raise ValueError("unitaries must be square and equally sized")
    if w.shape != (us.shape[0],):
        raise BadWeights(f"{w.size} weights for {us.shape[0]} unitaries")
    if np.any(w == 0):
        raise BadWeights("weights must be nonzero")
    if abs(np.sum(np.abs(w) ** 2) - 1) > WEIGHT_TOL:
        raise BadWeights(f"sum |w_i|^2 = {np.sum(np.abs(w) ** 2):.15g}, expected 1")
    eye = np.eye(us.shape[1])
    for i, u in enumerate(us):
        err = np.linalg.norm(u.conj().T @ u - eye, 2)
        if err > UNITARY_TOL:
            raise NotUnitary(f"matrix {i} has ||U*U - I|| = {err:.3e}")
    return RowTuple(w[:, None, None] * us)


def weyl_unitaries(n: int, d: int) -> list[np.ndarray]:
    """``S, M`` then further ``S^a M^b`` in lexicographic ``(a, b)`` order, ``d`` in all."""
    if not 1 <= d <= n * n:
        raise ValueError(f"need 1 <= d <= {n * n}")
    pairs = [(1, 0), (0, 1)] + [(a, b) for a in range(n) for b in range(n)
                                if (a, b) not in ((0, 0), (1, 0), (0, 1))] + [(0, 0)]
    S, M = shift_matrix(n), clock_matrix(n)
    mp = np.linalg.matrix_power
    return [mp(S, a) @ mp(M, b) for a, b in pairs[:d]]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normal entries (real and imaginary variance 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def normalize_row(Z: np.ndarray, scale: float) -> np.ndarray:
    """``scale * (sum Z_i Z_i^*)^{-1/2} Z``; ``None`` if the Gram matrix is singular."""
    G = np.einsum("aij,akj->ik", Z, Z.conj())
    w, V = np.linalg.eigh(G)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        return None
    root_inv = (V / np.sqrt(w)) @ V.conj().T
    return scale * np.einsum("ij,ajk->aik", root_inv, Z)


def random_normalized_from(rng: np.random.Generator, n: int, d: int, epsilon: float,
                           max_tries: int = 100) -> np.ndarray:
    """Draw one normalised node as a ``(d, n, n)`` array from ``rng``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    for _ in range(max_tries):
        X = normalize_row(complex_gaussian(rng, (d, n, n)), 1.0 - epsilon)
        if X is not None:
            return X
    raise RuntimeError("could not draw an invertible Gram matrix")


def random_normalized(n: int, d: int, epsilon: float, seed: int) -> RowTuple:
    """Gaussian tuple rescaled so ``sum X_i X_i^* = (1 - epsilon)^2 I``."""
    return RowTuple(random_normalized_from(np.random.default_rng(seed), n, d, epsilon))


def random_contraction(n: int, d: int, row_norm: float, rng: np.random.Generator) -> RowTuple:
    """Gaussian tuple scaled (not normalised) to the given row norm."""
    Z = complex_gaussian(rng, (d, n, n))
    top = np.sqrt(np.linalg.eigvalsh(np.einsum("aij,akj->ik", Z, Z.conj()))[-1])
    return RowTuple(row_norm / top * Z)


@dataclass(frozen=True)
class NodeSpec:
    kind: str
    n: int
    d: int | None = None
    weights: tuple | None = None
    epsilon: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}; expected one of {KINDS}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.complex128)
            if np.any(w == 0) or abs(np.sum(np.abs(w) ** 2) - 1) > WEIGHT_TOL:
                raise BadWeights("weights must be nonzero with sum |w_i|^2 = 1")

    def build(self) -> RowTuple:
        if self.kind == "shift-dft":
            if self.weights is None:
                return shift_dft(self.n)
            return weighted_unitaries([shift_matrix(self.n), clock_matrix(self.n)], self.weights)
        if self.kind == "choi-point":
            return choi_point(self.n)
        if self.kind == "random-normalized":
            return random_normalized(self.n, self.d or 2, 1e-3 if self.epsilon is None else self.epsilon,
                                     0 if self.seed is None else self.seed)
        d = self.d or (2 if self.weights is None else len(self.weights))
        weights = self.weights if self.weights is not None else [1 / np.sqrt(d)] * d
        return weighted_unitaries(weyl_unitaries(self.n, d), weights)
