"""Randomised identity suites with per-suite residuals and pass/fail verdicts."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import dilation, ncpoly, tensor
from .pick import (BlockTarget, choi_series, feasible, pick_matrix, series_tail_bound)
from .zoo import complex_gaussian, random_contraction

LEVELS = {"quick": (3, 10), "full": (5, 100)}


def corrupt_psi(a):
    """Deliberately wrong leg permutation (not an involution); negative control only."""
    a = np.asarray(a)
    n = int(round(np.sqrt(a.shape[0])))
    return a.reshape(n, n, n, n).transpose(1, 2, 3, 0).reshape(n * n, n * n)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    trials: int


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b, 2) / max(1.0, np.linalg.norm(b, 2)))


def _node(rng, nmax, dmax=3, rmax=0.9):
    n = int(rng.integers(1, nmax + 1))
    d = int(rng.integers(1, dmax + 1))
    return random_contraction(n, d, float(rng.uniform(0.1, rmax)), rng)


def _herm(rng, n):
    H = complex_gaussian(rng, (n, n))
    return H + H.conj().T


def suite_psi_involution(rng, nmax, trials, psi):
    worst = 0.0
    for k in range(trials):
        n = 1 + k % max(nmax + 1, 6)
        A = complex_gaussian(rng, (n * n, n * n))
        worst = max(worst, float(np.max(np.abs(psi(psi(A)) - A))))
    return worst, 0.0


def suite_psi_modularity(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, min(nmax, 4) + 1))
        A, B, C, D = (complex_gaussian(rng, (n, n)) for _ in range(4))
        U = complex_gaussian(rng, (n * n, n * n))
        lhs = psi(np.kron(A, B) @ U @ np.kron(C, D))
        rhs = np.kron(D.T, B) @ psi(U) @ np.kron(C, A.T)
        worst = max(worst, _rel(lhs, rhs))
    return worst, 1e-10


def suite_vec_identity(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, nmax + 1))
        A, X, B = (complex_gaussian(rng, (n, n)) for _ in range(3))
        lhs = tensor.vec(A @ X @ B)
        rhs = np.kron(B.T, A) @ tensor.vec(X)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))))
    return worst, 1e-12


def suite_series_tail(rng, nmax, trials, psi, L=12):
    """Truncation error over its geometric bound plus a rounding floor (must stay below 1)."""
    worst = 0.0
    for _ in range(trials):
        X = _node(rng, min(nmax, 4))
        P = pick_matrix(X).P
        err = float(np.linalg.norm(choi_series(X, L) - P, 2))
        floor = 1e-12 * float(np.linalg.norm(P, 2))
        worst = max(worst, err / (series_tail_bound(X, L) + floor))
    return worst, 1.0


def suite_pick_recursion(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        X = _node(rng, min(nmax, 4))
        n = X.n
        P = pick_matrix(X).P
        eye = np.eye(n)
        S = sum(np.kron(x.T, eye) @ P @ np.kron(x.conj(), eye) for x in X.mats)
        r = np.linalg.norm(P - S - tensor.choi_matrix(n), 2) / np.linalg.norm(P, 2)
        worst = max(worst, float(r))
    return worst, 1e-9


def _stencil(X, H):
    return H - sum(x @ H @ x.conj().T for x in X.mats)


def suite_stencil_recovery(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        X = _node(rng, nmax)
        H = _herm(rng, X.n)
        P = pick_matrix(X).P
        Bm = dilation.boomerang(X.n)
        lhs = Bm.T @ np.kron(P, _stencil(X, H)) @ Bm
        worst = max(worst, _rel(lhs, H) / np.linalg.norm(P, 2))
    return worst, 1e-10


def suite_boomerang_switch(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, nmax + 1))
        C, D = complex_gaussian(rng, (n, n)), complex_gaussian(rng, (n, n))
        A = complex_gaussian(rng, (n * n, n * n))
        Bm = dilation.boomerang(n)
        eye = np.eye(n)
        r1 = _rel(np.kron(np.kron(C, eye), eye) @ Bm, np.kron(np.kron(eye, eye), C.T) @ Bm)
        lhs = Bm.T @ np.kron(A, C @ D) @ Bm
        rhs = Bm.T @ np.kron(np.kron(C.T, eye) @ A @ np.kron(D.T, eye), eye) @ Bm
        worst = max(worst, r1, _rel(lhs, rhs))
    return worst, 1e-10


def suite_ampliated_switch(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, min(nmax, 4) + 1))
        s, t = (int(v) for v in rng.integers(1, 4, size=2))
        A = complex_gaussian(rng, (n * n, n * n))
        C = complex_gaussian(rng, (n, n))
        Z = complex_gaussian(rng, (n * t, n * s))
        Wm = complex_gaussian(rng, (n * s, n * t))
        Bs, Bt = dilation.ampliated_boomerang(n, s), dilation.ampliated_boomerang(n, t)
        It, In = np.eye(t), np.eye(n)
        right_l = np.kron(np.kron(A, It) @ np.kron(In, Z), C) @ Bs
        right_r = np.kron(np.kron(A, It), C) @ Bt @ Z
        left_l = Bs.T @ np.kron(np.kron(In, Wm) @ np.kron(A, It), C)
        left_r = Wm @ Bt.T @ np.kron(np.kron(A, It), C)
        J, K = complex_gaussian(rng, (n * s, n * s)), complex_gaussian(rng, (n * s, n * s))
        Is = np.eye(s)
        dbl_l = Bs.T @ np.kron(np.kron(In, J) @ np.kron(A, Is) @ np.kron(In, K), C) @ Bs
        dbl_r = J @ Bs.T @ np.kron(np.kron(A, Is), C) @ Bs @ K
        worst = max(worst, _rel(right_l, right_r), _rel(left_l, left_r), _rel(dbl_l, dbl_r))
    return worst, 1e-10


def suite_ampliated_recovery(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        X = _node(rng, min(nmax, 4))
        n = X.n
        s = int(rng.integers(1, 4))
        H = _herm(rng, n)
        P = pick_matrix(X).P
        Bs = dilation.ampliated_boomerang(n, s)
        lhs = Bs.T @ np.kron(np.kron(P, np.eye(s)), _stencil(X, H)) @ Bs
        worst = max(worst, _rel(lhs, np.kron(H, np.eye(s))) / np.linalg.norm(P, 2))
    return worst, 1e-10


def suite_isometry(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, dilation.dilation_data(_node(rng, nmax)).isometry_residual)
    return worst, 1e-9


def suite_mini_dilation(rng, nmax, trials, psi):
    worst = 0.0
    for _ in range(trials):
        X = _node(rng, min(nmax, 3))
        D = dilation.dilation_data(X)
        a = ncpoly.random_poly(X.d, int(rng.integers(0, 4)), rng)
        b = ncpoly.random_poly(X.d, int(rng.integers(0, 4)), rng)
        worst = max(worst, dilation.mini_dilation_check(D, a, b))
    return worst, 1e-7


def classical_pick(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (1 - np.outer(y, y.conj())) / (1 - np.outer(x, x.conj()))


def scalar_problem(rng, k: int):
    x = np.sqrt(rng.uniform(0, 0.9, k)) * np.exp(2j * np.pi * rng.uniform(size=k))
    y = np.sqrt(rng.uniform(0, 1.1, k)) * np.exp(2j * np.pi * rng.uniform(size=k))
    return x, y


def collapse_disagreement(x, y, slack: float = 1e-8) -> tuple[bool, float, float]:
    """``(agree, criterion margin, classical margin)`` for one scalar problem."""
    B = pick_matrix(np.diag(x)[None])
    f = feasible(B, BlockTarget.single(np.diag(y)))
    ref = float(np.linalg.eigvalsh(classical_pick(x, y))[0])
    m = f.range_margin
    agree = (np.sign(m) == np.sign(ref) and f.feasible == (ref >= -slack)) or \
        (abs(m) <= slack and abs(ref) <= slack)
    return bool(agree), m, ref


def suite_scalar_collapse(rng, nmax, trials, psi):
    bad = 0
    for _ in range(trials):
        x, y = scalar_problem(rng, int(rng.integers(2, 5)))
        bad += not collapse_disagreement(x, y)[0]
    return float(bad), 0.0


SUITES: dict[str, Callable] = {
    "psi-involution": suite_psi_involution,
    "psi-modularity": suite_psi_modularity,
    "vec-identity": suite_vec_identity,
    "series-tail": suite_series_tail,
    "pick-recursion": suite_pick_recursion,
    "stencil-recovery": suite_stencil_recovery,
    "boomerang-switch": suite_boomerang_switch,
    "ampliated-switch": suite_ampliated_switch,
    "ampliated-recovery": suite_ampliated_recovery,
    "isometry": suite_isometry,
    "mini-dilation": suite_mini_dilation,
    "scalar-pick-collapse": suite_scalar_collapse,
}


def run_suite(name: str, level: str = "quick", seed: int = 0, corrupt: bool = False) -> SuiteResult:
    nmax, trials = LEVELS[level]
    idx = list(SUITES).index(name)
    rng = np.random.default_rng([seed, idx])
    psi = corrupt_psi if corrupt else tensor.psi
    try:
        residual, tol = SUITES[name](rng, nmax, trials, psi)
    except Exception:  # noqa: BLE001 - a crashing suite is a failing suite
        return SuiteResult(name, False, float("inf"), 0.0, trials)
    return SuiteResult(name, bool(residual <= tol), float(residual), float(tol), trials)


def _run_args(args):
    return run_suite(*args)


def run_all(level: str = "quick", seed: int = 0, corrupt: bool = False, jobs: int = 1,
            names=None) -> list[SuiteResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {sorted(LEVELS)}")
    names = list(SUITES) if names is None else list(names)
    args = [(nm, level, seed, corrupt) for nm in names]
    if jobs <= 1:
        return [_run_args(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_args, args))


def results_to_json(results: list[SuiteResult]) -> list[dict]:
    out = []
    for r in results:
        d = asdict(r)
        if not np.isfinite(d["residual"]):
            d["residual"] = None
        out.append(d)
    return out
