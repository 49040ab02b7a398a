"""Compiled versus pure-Python column/row kernel on identical trial batches.

    python3 benchmarks/bench_kernel.py --trials 500 --n 2 --m 2
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ncpick import kernel
from ncpick.search import SearchConfig, _draw_node, trial_seed


def make_batch(cfg: SearchConfig, trials: int) -> np.ndarray:
    Xs = np.empty((trials, cfg.d, cfg.n, cfg.n), dtype=np.complex128)
    for i in range(trials):
        Xs[i] = _draw_node(cfg, np.random.default_rng(trial_seed(cfg.seed, i)))[0]
    return Xs


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = SearchConfig(n=args.n, m=args.m, d=args.d)
    Xs = make_batch(cfg, args.trials)
    if not kernel.compiled_available():
        print("compiled kernel not built; only the Python fallback is timed")
    out = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and not kernel.compiled_available():
            continue
        run = lambda b=backend: kernel.colrow_batch(Xs, args.m, backend=b)  # noqa: E731
        out[backend] = run()
        secs = best_of(run, args.repeats)
        print(f"{backend:>8}: {secs * 1e3:9.2f} ms total, {secs * 1e6 / args.trials:8.1f} us/trial")
    if len(out) == 2:
        (r1, c1, s1, y1), (r2, c2, s2, y2) = out["python"], out["compiled"]
        ok = (s1 == 0) & (s2 == 0)
        print(f"status agreement: {np.mean(s1 == s2):.4f}")
        print(f"max |row| diff {np.max(np.abs(r1[ok] - r2[ok])):.2e}, "
              f"max |col| diff {np.max(np.abs(c1[ok] - c2[ok])):.2e}, "
              f"max |Y| diff {np.max(np.abs(y1[ok] - y2[ok])):.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
