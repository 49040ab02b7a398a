"""Boundary behaviour of the Pick matrix: Perron data of the transfer matrix,
the ANP norm along ``tX``, condition numbers, and direct-sum limits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import tensor
from .errors import (
    BudgetExhausted,
    DegenerateGap,
    NotCoisometry,
    NotFullRank,
    NotInAlgebra,
    NotIrreducible,
)
from .pick import (
    BlockTarget,
    PickBundle,
    RowTuple,
    bundle_from_matrix,
    np_norm,
    pick_matrix,
    transfer,
)
from .zoo import complex_gaussian, shift_dft

COISOMETRY_TOL = 1e-10
GAP_TOL = 1e-8
IRREDUCIBLE_SCALE = 0.99
SHAPES = ((1, 1), (1, 2), (2, 1), (2, 2))


def coisometry_defect(X) -> float:
    X = RowTuple.coerce(X)
    return float(np.linalg.norm(X.gram() - np.eye(X.n), 2))


def require_coisometry(X, tol: float = COISOMETRY_TOL) -> None:
    err = coisometry_defect(X)
    if err > tol:
        raise NotCoisometry(f"||sum X_i X_i^* - I|| = {err:.3e} exceeds {tol:g}")


def require_irreducible(X) -> None:
    X = RowTuple.coerce(X)
    B = pick_matrix(X.scaled(IRREDUCIBLE_SCALE))
    if B.rank < X.n ** 2:
        raise NotIrreducible(f"alg_X has dimension {B.rank} < {X.n ** 2}")


@dataclass(frozen=True, eq=False)
class PerronData:
    """Fixed point ``W`` of ``H -> sum X_i^* H X_i`` and spectral data of ``T``.

    ``gapToNext`` is ``min |1 - lambda|`` over the other eigenvalues of ``T``;
    ``secondModulus`` is the largest of their moduli (equal to 1 when ``T`` has
    other peripheral eigenvalues, as for the shift/clock pair).
    """

    W: np.ndarray
    spectralRadius: float
    gapToNext: float
    normalizationCheck: complex
    secondModulus: float
    peripheralCount: int
    fixedPointResidual: float
    X: RowTuple = field(repr=False)


def perron(X) -> PerronData:
    X = RowTuple.coerce(X)
    require_coisometry(X)
    require_irreducible(X)
    n = X.n
    T = transfer(X)
    lam, vecs = np.linalg.eig(T.conj().T)
    k = int(np.argmin(np.abs(lam - 1)))
    others = np.delete(lam, k)
    gap = float(np.min(np.abs(others - 1))) if others.size else 1.0
    if gap <= GAP_TOL:
        raise DegenerateGap(f"another eigenvalue of T lies within {gap:.3e} of 1")
    W = tensor.unvec(vecs[:, k], n)
    W = 0.5 * (W + W.conj().T)
    W = W / np.trace(W).real
    resid = float(np.linalg.norm(np.einsum("aji,jk,akl->il", X.mats.conj(), W, X.mats) - W, 2))
    mods = np.abs(lam)
    second = float(np.max(np.abs(others))) if others.size else 0.0
    return PerronData(
        W=W,
        spectralRadius=float(mods.max()),
        gapToNext=gap,
        normalizationCheck=complex(np.vdot(tensor.vec(W), tensor.vec(np.eye(n)))),
        secondModulus=second,
        peripheralCount=int(np.sum(np.abs(mods - 1) <= GAP_TOL)),
        fixedPointResidual=resid,
        X=X,
    )


def anp_limit_matrix(pd: PerronData) -> np.ndarray:
    """``conj(W) (x) I_n``, the limit of ``(1 - t^2) / t^2 P_{tX}`` as ``t -> 1``."""
    return np.kron(pd.W.conj(), np.eye(pd.W.shape[0]))


def limit_distance(X, t: float, pd: PerronData | None = None) -> float:
    X = RowTuple.coerce(X)
    pd = perron(X) if pd is None else pd
    P = pick_matrix(X.scaled(t)).P
    return float(np.linalg.norm((1 - t * t) / (t * t) * P - anp_limit_matrix(pd), 2))


@dataclass(frozen=True)
class TracePoint:
    t: float
    np_norm: float
    target_norm: float
    ratio: float


@dataclass(frozen=True)
class AnpResult:
    value: float
    target_norm: float
    trace: tuple[TracePoint, ...]
    drift: float

    def non_increasing(self, slack: float = 1e-6) -> bool:
        vals = [p.np_norm for p in self.trace]
        return all(b <= a + slack for a, b in zip(vals, vals[1:]))


def _check_grid(t_grid: Sequence[float]) -> list[float]:
    grid = [float(t) for t in t_grid]
    if not grid or any(not 0 < t < 1 for t in grid):
        raise ValueError("t grid must be non-empty and inside (0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t grid must be strictly increasing")
    return grid


def anp_norm(X, Y: BlockTarget, t_grid: Sequence[float] = (0.9, 0.99, 0.999)) -> AnpResult:
    """``||Y||_{NP(tX)}`` along ``t_grid``; tends to ``||Y||`` for irreducible co-isometries."""
    X = RowTuple.coerce(X)
    require_coisometry(X)
    require_irreducible(X)
    grid = _check_grid(t_grid)
    ny = Y.norm()
    pts = []
    for t in grid:
        v = np_norm(pick_matrix(X.scaled(t)), Y)
        pts.append(TracePoint(t, v, ny, v / ny if ny > 0 else float("nan")))
    last = pts[-1].np_norm
    return AnpResult(last, ny, tuple(pts), abs(last - ny))


def alg_projected_target(B: PickBundle, s: int, t: int, rng: np.random.Generator) -> BlockTarget:
    """Gaussian blocks with each ``vec`` projected onto ``ran P_X``."""
    n = B.n
    blocks = np.empty((s, t, n, n), dtype=np.complex128)
    for a in range(s):
        for b in range(t):
            g = tensor.vec(complex_gaussian(rng, (n, n)))
            blocks[a, b] = tensor.unvec(B.projQ @ g, n)
    return BlockTarget(blocks)


@dataclass(frozen=True, eq=False)
class KappaReport:
    kappaLower: float
    samples: int
    worst: BlockTarget | None = field(default=None, repr=False)


def kappa_lower(X, samples: int = 64, seed: int = 0, B: PickBundle | None = None) -> KappaReport:
    """Largest sampled ``||Y||_NP / ||Y||``; the target ``Y = I`` is always included."""
    X = RowTuple.coerce(X)
    B = pick_matrix(X) if B is None else B
    rng = np.random.default_rng(seed)
    eye = BlockTarget.single(np.eye(X.n))
    best, worst = np_norm(B, eye), eye
    for k in range(samples):
        s, t = SHAPES[k % len(SHAPES)]
        Y = alg_projected_target(B, s, t, rng)
        ny = Y.norm()
        if ny == 0:
            continue
        r = np_norm(B, Y, check=False) / ny
        if r > best:
            best, worst = r, Y
    return KappaReport(float(best), samples + 1, worst)


def commutant_basis(X, hermitian: bool = True, tol: float = 1e-10) -> list[np.ndarray]:
    """Basis of ``{D : D (I (x) X_i) = (I (x) X_i) D}``.

    With ``hermitian=True`` returns a real basis of Hermitian elements of the
    commutant of ``{I (x) X_i, I (x) X_i^*}`` (a *-algebra).
    """
    X = RowTuple.coerce(X)
    n = X.n
    N = n * n
    eye_N = np.eye(N)
    lifts = [np.kron(np.eye(n), x) for x in X.mats]
    if hermitian:
        lifts = lifts + [l.conj().T for l in lifts]
    # vec(D L - L D) = (L^T (x) I - I (x) L) vec(D)
    A = np.vstack([np.kron(l.T, eye_N) - np.kron(eye_N, l) for l in lifts])
    null = sla.null_space(A, rcond=tol)
    mats = [tensor.unvec(null[:, k], N) for k in range(null.shape[1])]
    if not hermitian:
        return mats
    cand = []
    for M in mats:
        cand.append(0.5 * (M + M.conj().T))
        cand.append(0.5j * (M.conj().T - M))
    # orthonormalise over the reals
    R = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cand])
    U, s, Vt = np.linalg.svd(R, full_matrices=False)
    keep = s > tol * s[0]
    out = []
    for row in Vt[keep]:
        H = (row[: N * N] + 1j * row[N * N:]).reshape(N, N)
        out.append(0.5 * (H + H.conj().T))
    return out


def commutant_dimension(X) -> int:
    return len(commutant_basis(X, hermitian=False))


def _cond(P: np.ndarray, on_range: bool, rank_tol: float = 1e-10) -> float:
    w = np.linalg.eigvalsh(0.5 * (P + P.conj().T))
    if on_range:
        w = w[w > rank_tol * w[-1]]
    elif w[0] <= rank_tol * w[-1]:
        return float("inf")
    return float(np.sqrt(w[-1] / w[0]))


@dataclass(frozen=True, eq=False)
class GammaReport:
    gammaUpper: float
    gammaIdentity: float
    bestD: np.ndarray = field(repr=False)
    evaluations: int = 0
    commutantDim: int = 0


def gamma_effective(X, budget: int = 200, seed: int = 0, on_range: bool = False,
                    B: PickBundle | None = None, step: float = 0.5) -> GammaReport:
    """Anytime upper estimate of ``inf_D sqrt(cond(D P_X D))`` over the commutant.

    Coordinate descent on ``D = exp(sum_k c_k H_k)`` with a Hermitian commutant
    basis ``{H_k}``; a step is accepted only if it lowers the condition number
    and the step is halved after a sweep without improvement.
    """
    X = RowTuple.coerce(X)
    B = pick_matrix(X) if B is None else B
    if not B.full_rank and not on_range:
        raise NotFullRank(f"P_X has rank {B.rank} < {B.P.shape[0]}; pass on_range=True")
    P = B.P
    basis = commutant_basis(X)
    rng = np.random.default_rng(seed)

    def evaluate(c):
        H = sum(ck * Hk for ck, Hk in zip(c, basis))
        w, V = np.linalg.eigh(H)
        D = (V * np.exp(w)) @ V.conj().T
        return _cond(D @ P @ D, on_range, B.rankTol), D

    c = np.zeros(len(basis))
    best, bestD = evaluate(c)
    g0 = best
    evals = 1
    h = step
    while evals < budget and h > 1e-6:
        improved = False
        for k in rng.permutation(len(basis)):
            for sgn in (1.0, -1.0):
                if evals >= budget:
                    break
                trial = c.copy()
                trial[k] += sgn * h
                val, D = evaluate(trial)
                evals += 1
                if val < best:
                    best, bestD, c, improved = val, D, trial, True
                    break
        if not improved:
            h *= 0.5
    return GammaReport(float(best), float(g0), bestD, evals, len(basis))


@dataclass(frozen=True, eq=False)
class ConditionReport:
    kappaLower: float
    gammaUpper: float
    bestD: np.ndarray = field(repr=False)
    samples: int


def condition_report(X, samples: int = 64, budget: int = 200, seed: int = 0,
                     on_range: bool = False) -> ConditionReport:
    X = RowTuple.coerce(X)
    B = pick_matrix(X)
    k = kappa_lower(X, samples, seed, B)
    g = gamma_effective(X, budget, seed, on_range, B)
    return ConditionReport(k.kappaLower, g.gammaUpper, g.bestD, k.samples)


def direct_sum(X1, X2) -> RowTuple:
    """Coordinatewise block-diagonal tuple ``(X1_i (+) X2_i)``."""
    X1, X2 = RowTuple.coerce(X1), RowTuple.coerce(X2)
    if X1.d != X2.d:
        raise ValueError(f"letter counts differ: {X1.d} vs {X2.d}")
    return RowTuple(np.asarray([sla.block_diag(a, b) for a, b in zip(X1.mats, X2.mats)]))


def direct_sum_many(nodes: Sequence) -> RowTuple:
    out = RowTuple.coerce(nodes[0])
    for X in nodes[1:]:
        out = direct_sum(out, X)
    return out


def mixed_spectral_radius(X1, X2) -> float:
    """Spectral radius of ``sum_i conj(X1_i) (x) X2_i``."""
    X1, X2 = RowTuple.coerce(X1), RowTuple.coerce(X2)
    if X1.d != X2.d:
        raise ValueError(f"letter counts differ: {X1.d} vs {X2.d}")
    T = sum(np.kron(a.conj(), b) for a, b in zip(X1.mats, X2.mats))
    return float(np.max(np.abs(np.linalg.eigvals(T))))


def block_index_sets(n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices ``(a, b)`` of ``C^N (x) C^N`` with both legs in the first, resp. second summand."""
    N = n1 + n2
    first = np.array([a * N + b for a in range(n1) for b in range(n1)])
    second = np.array([a * N + b for a in range(n1, N) for b in range(n1, N)])
    return first, second


def direct_sum_preconditioner(n1: int, n2: int, t: float) -> np.ndarray:
    """``diag(I_{n1}, sqrt(n2 (1 - t^2)) I_{n2}) (x) I_N``."""
    N = n1 + n2
    diag = np.concatenate([np.ones(n1), np.full(n2, np.sqrt(n2 * (1 - t * t)))])
    return np.kron(np.diag(diag), np.eye(N))


@dataclass(frozen=True)
class DirectSumPoint:
    t: float
    distance: float
    cross: float
    first_block: float
    second_block: float
    outside_support: float
    cond_plain: float
    cond_preconditioned: float


@dataclass(frozen=True)
class DirectSumReport:
    points: tuple[DirectSumPoint, ...]
    mixed_radius: float

    @property
    def decreasing(self) -> bool:
        d = [p.distance for p in self.points]
        return all(b < a for a, b in zip(d, d[1:]))


def direct_sum_limit_check(X1, X2, t_grid: Sequence[float] = (0.9, 0.99, 0.999)) -> DirectSumReport:
    """Distance of the preconditioned ``P_{X1 (+) t X2}`` from ``diag(P_{X1}, I)``.

    Distances are operator norms on the support of the Pick matrix, regrouped
    as the 2 x 2 pattern of first-summand and second-summand index pairs.
    """
    X1, X2 = RowTuple.coerce(X1), RowTuple.coerce(X2)
    grid = _check_grid(t_grid)
    if np.linalg.eigvalsh(X1.gram())[-1] >= 1:
        raise ValueError("X1 must be a strict row contraction")
    require_coisometry(X2)
    require_irreducible(X2)
    n1, n2 = X1.n, X2.n
    P1 = pick_matrix(X1).P
    first, second = block_index_sets(n1, n2)
    support = np.concatenate([first, second])
    target = sla.block_diag(P1, np.eye(n2 * n2))
    pts = []
    for t in grid:
        B = pick_matrix(direct_sum(X1, X2.scaled(t)))
        D = direct_sum_preconditioner(n1, n2, t)
        Pt = D @ B.P @ D
        R = Pt[np.ix_(support, support)]
        diff = R - target
        k = n1 * n1
        mask = np.ones(Pt.shape[0], bool)
        mask[support] = False
        outside = float(np.max(np.abs(Pt[mask]), initial=0.0))
        pts.append(DirectSumPoint(
            t=t,
            distance=float(np.linalg.norm(diff, 2)),
            cross=float(np.linalg.norm(diff[:k, k:], 2)),
            first_block=float(np.linalg.norm(diff[:k, :k], 2)),
            second_block=float(np.linalg.norm(diff[k:, k:], 2)),
            outside_support=outside,
            cond_plain=_cond(B.P, True, B.rankTol),
            cond_preconditioned=_cond(Pt, True, B.rankTol),
        ))
    return DirectSumReport(tuple(pts), mixed_spectral_radius(X1, X2))


def _zoo_node(n: int) -> RowTuple:
    if n == 1:
        return RowTuple(np.full((2, 1, 1), 1 / np.sqrt(2), dtype=np.complex128))
    return shift_dft(n)


@dataclass(frozen=True, eq=False)
class PrefixResult:
    scales: tuple[float, ...]
    nodes: tuple[RowTuple, ...] = field(repr=False)
    certificate: float
    samples: int
    iterations: int


def _block_diag_target(sizes: Sequence[int], rhos: Sequence[float], rng) -> BlockTarget:
    blocks = []
    for n, rho in zip(sizes, rhos):
        G = complex_gaussian(rng, (n, n))
        nrm = np.linalg.norm(G, 2)
        blocks.append(rho * G / nrm if nrm > 0 else G)
    return BlockTarget.single(sla.block_diag(*blocks))


def interpolating_prefix(rhos: Sequence[float], ns: Sequence[int], tol_slack: float = 1e-6,
                         samples: int = 32, budget: int = 20, seed: int = 0) -> PrefixResult:
    """Scales ``t_1 < t_2 < ...`` so sampled block-diagonal targets of norm ``rho_i`` interpolate.

    Round ``k`` tries ``t_i = 1 - g^{i+1}`` with ``g = 2^{-k}`` (``i`` from 0), so
    later nodes sit ever closer to the boundary and ever further apart; it succeeds
    when every sampled ``Y = (+) Y_i`` with ``||Y_i|| = rho_i`` has NP norm at
    most ``1 - tol_slack`` at the direct-sum node.
    """
    rhos = [float(r) for r in rhos]
    ns = [int(n) for n in ns]
    if len(rhos) != len(ns) or not rhos:
        raise ValueError("rhos and ns must be non-empty and of equal length")
    if any(not 0 <= r < 1 for r in rhos):
        raise ValueError("each rho must lie in [0, 1)")
    base = [_zoo_node(n) for n in ns]
    for k in range(1, budget + 1):
        scales = [1 - 0.5 ** (k * (i + 1)) for i in range(len(ns))]
        nodes = [U.scaled(t) for U, t in zip(base, scales)]
        B = pick_matrix(direct_sum_many(nodes))
        rng = np.random.default_rng([seed, k])
        worst = 0.0
        try:
            for _ in range(samples):
                worst = max(worst, np_norm(B, _block_diag_target(ns, rhos, rng)))
        except NotInAlgebra:
            continue
        if worst + tol_slack <= 1.0:
            return PrefixResult(tuple(scales), tuple(nodes), worst + tol_slack, samples, k)
    raise BudgetExhausted(f"no certifying scales within {budget} rounds")
