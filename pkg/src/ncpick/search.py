"""Column-row experiments: the deterministic shift/clock construction and the
seeded randomized search for nodes whose row targets are much harder to
interpolate than the matching column targets."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterator

import numpy as np

from . import kernel
from .pick import BlockTarget, RowTuple, np_norm, pick_matrix
from .selection import ORIENTATIONS, eigen_target_select
from .zoo import complex_gaussian, shift_dft

log = logging.getLogger(__name__)

EPSILON_MODES = ("range", "fixed")
DOMINANCE_SLACK = 1e-8

__all__ = [
    "SearchConfig", "SearchRecord", "SearchResult", "deterministic_colrow",
    "eigen_target_select", "iter_search", "random_search", "trial_seed",
]


@dataclass(frozen=True)
class SearchConfig:
    """Parameters of the randomized search loop.

    ``epsilon_mode="range"`` draws a fresh scale-back in ``(0, epsilon)`` per
    trial; ``"fixed"`` uses ``epsilon`` itself. With ``normalize=False`` the
    Gaussian tuple is only rescaled to row norm ``row_norm_target``.
    """

    n: int = 2
    m: int = 2
    d: int = 2
    gamma: float = 1.3
    epsilon: float = 1e-2
    epsilon_mode: str = "range"
    normalize: bool = True
    row_norm_target: float = 0.9
    max_trials: int = 100_000
    seed: int = 0
    jobs: int = 1
    batch_size: int = 256
    orientation: str = "transpose"
    backend: str = "auto"
    timing: bool = False
    rank_tol: float = 1e-10

    def __post_init__(self):
        if min(self.n, self.m, self.d) < 1:
            raise ValueError("n, m and d must be positive")
        if self.m > self.n ** 2:
            raise ValueError(f"m = {self.m} exceeds n^2 = {self.n ** 2}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.epsilon_mode not in EPSILON_MODES:
            raise ValueError(f"epsilon_mode must be one of {EPSILON_MODES}")
        if not 0 < self.row_norm_target < 1:
            raise ValueError("row_norm_target must lie in (0, 1)")
        if self.max_trials < 1 or self.batch_size < 1 or self.jobs < 1:
            raise ValueError("max_trials, batch_size and jobs must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if self.backend not in kernel.BACKENDS:
            raise ValueError(f"backend must be one of {kernel.BACKENDS}")

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SearchRecord:
    trialIndex: int
    seed: int | None
    n: int
    m: int
    epsilon: float
    X: np.ndarray = field(repr=False)
    Ys: np.ndarray = field(repr=False)
    rowNormNP: float
    colNormNP: float
    ratio: float
    elapsed_ms: float | None = None

    @property
    def node(self) -> RowTuple:
        return RowTuple(self.X)


def trial_seed(master: int, index: int) -> int:
    """64-bit seed for trial ``index``, a hash of ``(master, index)``."""
    words = np.random.SeedSequence([master, index]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def deterministic_colrow(n: int, t: float) -> SearchRecord:
    """Row ``[E_11 ... E_1n]`` versus column targets at ``t`` times the shift/clock pair."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    X = shift_dft(n).scaled(t)
    B = pick_matrix(X)
    Ys = []
    for i in range(n):
        E = np.zeros((n, n), dtype=np.complex128)
        E[0, i] = 1.0
        Ys.append(E)
    row = np_norm(B, BlockTarget.row(Ys))
    col = np_norm(B, BlockTarget.column(Ys))
    return SearchRecord(0, None, n, n, 1.0 - t, X.mats.copy(), np.asarray(Ys), row, col, row / col)


def _draw_node(cfg: SearchConfig, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    if cfg.epsilon_mode == "range":
        eps = rng.uniform(0.0, cfg.epsilon)
        eps = eps if eps > 0 else cfg.epsilon / 2
    else:
        eps = cfg.epsilon
    shape = (cfg.d, cfg.n, cfg.n)
    while True:
        Z = complex_gaussian(rng, shape)
        G = np.einsum("aij,akj->ik", Z, Z.conj())
        w, V = np.linalg.eigh(G)
        if w[0] > 1e-12 * w[-1]:
            break
    if cfg.normalize:
        root_inv = (V / np.sqrt(w)) @ V.conj().T
        return (1.0 - eps) * np.einsum("ij,ajk->aik", root_inv, Z), eps
    return cfg.row_norm_target / np.sqrt(w[-1]) * Z, 1.0 - cfg.row_norm_target


def _run_batch(cfg: SearchConfig, start: int, stop: int):
    """Trials ``start <= i < stop``: per-trial seeds, nodes, and kernel output."""
    t0 = time.perf_counter()
    seeds = [trial_seed(cfg.seed, i) for i in range(start, stop)]
    Xs = np.empty((stop - start, cfg.d, cfg.n, cfg.n), dtype=np.complex128)
    eps = np.empty(stop - start)
    for k, s in enumerate(seeds):
        Xs[k], eps[k] = _draw_node(cfg, np.random.default_rng(s))
    row, col, status, Ys = kernel.colrow_batch(
        Xs, cfg.m, backend=cfg.backend, rank_tol=cfg.rank_tol,
        transpose=cfg.orientation == "transpose")
    per_trial = (time.perf_counter() - t0) * 1e3 / (stop - start)
    return start, seeds, Xs, eps, row, col, status, Ys, per_trial


def _batches(cfg: SearchConfig):
    for start in range(0, cfg.max_trials, cfg.batch_size):
        yield start, min(start + cfg.batch_size, cfg.max_trials)


def _ordered_batches(cfg: SearchConfig, jobs: int):
    if jobs <= 1:
        for start, stop in _batches(cfg):
            yield _run_batch(cfg, start, stop)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        pending = []
        spans = _batches(cfg)
        try:
            for span in spans:
                pending.append(pool.submit(_run_batch, cfg, *span))
                if len(pending) >= 2 * jobs:
                    yield pending.pop(0).result()
            while pending:
                yield pending.pop(0).result()
        finally:
            for f in pending:
                f.cancel()


@dataclass
class SearchResult:
    best: SearchRecord | None
    success: bool
    trials: int
    failures: int
    max_ratio: float
    dominance_violations: int
    failure_counts: dict = field(default_factory=dict)
    wall_seconds: float = 0.0


def iter_search(cfg: SearchConfig, jobs: int | None = None) -> Iterator[SearchRecord]:
    """Stream of trial records in trial order, ending at the first ratio above ``gamma``.

    Trials whose numerics fail are logged and skipped. The stream depends only
    on ``cfg`` (not on ``jobs``).
    """
    for out in _outcomes(cfg, jobs):
        if isinstance(out, SearchRecord):
            yield out


def _outcomes(cfg: SearchConfig, jobs: int | None):
    jobs = cfg.jobs if jobs is None else jobs
    for start, seeds, Xs, eps, row, col, status, Ys, per_trial in _ordered_batches(cfg, jobs):
        for k in range(len(seeds)):
            idx = start + k
            if status[k] != kernel.OK:
                log.info("trial %d skipped: %s", idx, kernel.STATUS_NAMES.get(int(status[k])))
                yield _Failure(idx, int(status[k]))
                continue
            rec = SearchRecord(idx, seeds[k], cfg.n, cfg.m, float(eps[k]), Xs[k], Ys[k],
                               float(row[k]), float(col[k]), float(row[k] / col[k]),
                               per_trial if cfg.timing else None)
            yield rec
            if cfg.gamma * rec.colNormNP < rec.rowNormNP:
                return


@dataclass(frozen=True)
class _Failure:
    trialIndex: int
    status: int


def random_search(cfg: SearchConfig, emit: Callable[[SearchRecord], None] | None = None,
                  jobs: int | None = None) -> SearchResult:
    """Run the loop: stop once ``gamma * col < row`` or after ``max_trials`` trials.

    On success the running maximum is set to the successful ratio; otherwise
    it tracks the largest ratio seen. ``emit`` receives every good record.
    """
    t0 = time.perf_counter()
    M_r = 0.0
    best: SearchRecord | None = None
    trials = failures = violations = 0
    counts: dict[str, int] = {}
    success = False
    for rec in _outcomes(cfg, jobs):
        trials += 1
        if isinstance(rec, _Failure):
            failures += 1
            name = kernel.STATUS_NAMES.get(rec.status, str(rec.status))
            counts[name] = counts.get(name, 0) + 1
            continue
        if rec.rowNormNP < rec.colNormNP - DOMINANCE_SLACK:
            violations += 1
            log.debug("trial %d: row norm below column norm", rec.trialIndex)
        if emit is not None:
            emit(rec)
        if cfg.gamma * rec.colNormNP < rec.rowNormNP:
            M_r, best, success = rec.ratio, rec, True
        elif best is None or rec.ratio > M_r:
            M_r, best = max(M_r, rec.ratio), rec
    return SearchResult(best, success, trials, failures, M_r, violations, counts,
                        time.perf_counter() - t0)


def default_jobs() -> int:
    return os.cpu_count() or 1
