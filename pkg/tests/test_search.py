import numpy as np
import pytest

from ncpick import kernel
from ncpick.errors import RankTooSmall
from ncpick.pick import BlockTarget, np_norm, pick_matrix
from ncpick.search import (SearchConfig, deterministic_colrow, iter_search, random_search,
                           trial_seed)
from ncpick.selection import eigen_target_select, phase_normalize, vector_to_target
from ncpick.tensor import unvec
from ncpick.zoo import choi_point, random_normalized, shift_dft

needs_compiled = pytest.mark.skipif(not kernel.compiled_available(),
                                    reason="compiled kernel not built")


# ---- deterministic construction

@pytest.mark.parametrize("n,t,floor", [(2, 0.9, 1.0), (2, 0.999, 1.30), (3, 0.999, 1.55)])
def test_deterministic_ratio(n, t, floor):
    rec = deterministic_colrow(n, t)
    assert rec.ratio > floor
    assert rec.ratio <= np.sqrt(n) + 1e-6
    assert abs(rec.ratio * rec.colNormNP / rec.rowNormNP - 1) <= 1e-8


@pytest.mark.parametrize("n", [2, 3])
def test_deterministic_monotone_in_t(n):
    r = [deterministic_colrow(n, t).ratio for t in (0.9, 0.99, 0.999)]
    assert r[0] <= r[1] + 1e-6 and r[1] <= r[2] + 1e-6


def test_deterministic_validation():
    with pytest.raises(ValueError):
        deterministic_colrow(1, 0.9)
    with pytest.raises(ValueError):
        deterministic_colrow(2, 1.0)


# ---- target selection

def test_phase_normalize():
    v = np.array([0, 1e-14, -2j, 1])
    u = phase_normalize(v)
    assert u[2].real > 0 and abs(u[2].imag) < 1e-15
    assert np.allclose(np.abs(u), np.abs(v))


def test_selection_choi_point_kernel_first():
    B = pick_matrix(choi_point(2).scaled(0.8))
    assert np.allclose(B.eigvals, [8 / 9] * 3 + [2 + 8 / 9])
    Ys = eigen_target_select(B, 3)
    for Y in Ys:
        # kernel of C_2 = vec(I) vec(I)^*: traceless targets
        assert abs(np.trace(Y)) < 1e-10
    again = eigen_target_select(pick_matrix(choi_point(2).scaled(0.8)), 3)
    assert all(np.array_equal(a, b) for a, b in zip(Ys, again))


def test_selection_full_basis(rng):
    B = pick_matrix(random_normalized(2, 2, 0.01, 3))
    Ys = eigen_target_select(B, B.rank)
    M = np.array([Y.ravel() for Y in Ys])
    assert np.allclose(M @ M.conj().T, np.eye(B.rank), atol=1e-10)


def test_selection_orientation():
    B = pick_matrix(random_normalized(2, 2, 0.01, 4))
    lit = eigen_target_select(B, 2, orientation="literal")
    tr = eigen_target_select(B, 2, orientation="transpose")
    for a, b in zip(lit, tr):
        assert np.array_equal(a.T, b)
    v = np.arange(4.0)
    assert np.array_equal(vector_to_target(v, 2, "literal"), unvec(v, 2))


def test_selection_rank_too_small():
    B = pick_matrix(np.array([np.diag([0.1, 0.5])], dtype=complex))
    with pytest.raises(RankTooSmall):
        eigen_target_select(B, 3)


# ---- kernel backends

def test_python_kernel_matches_direct_evaluation():
    X = random_normalized(2, 2, 0.005, 11).mats
    row, col, status, Ys = kernel.colrow_batch(X[None], 2, backend="python")
    assert status[0] == kernel.OK
    B = pick_matrix(X)
    assert np.isclose(row[0], np_norm(B, BlockTarget.row(list(Ys[0]))), rtol=1e-12)
    assert np.isclose(col[0], np_norm(B, BlockTarget.column(list(Ys[0]))), rtol=1e-12)


@needs_compiled
@pytest.mark.parametrize("n,m,transpose", [(2, 2, True), (2, 2, False), (3, 3, True), (2, 4, True)])
def test_compiled_matches_python(n, m, transpose):
    cfg = SearchConfig(n=n, m=m)
    rng = np.random.default_rng(5)
    from ncpick.search import _draw_node

    Xs = np.array([_draw_node(cfg, rng)[0] for _ in range(64)])
    a = kernel.colrow_batch(Xs, m, backend="python", transpose=transpose)
    b = kernel.colrow_batch(Xs, m, backend="compiled", transpose=transpose)
    assert np.array_equal(a[2], b[2])
    ok = a[2] == kernel.OK
    assert np.allclose(a[0][ok], b[0][ok], rtol=1e-10)
    assert np.allclose(a[1][ok], b[1][ok], rtol=1e-10)
    assert np.allclose(a[3][ok], b[3][ok], atol=1e-9)


def test_backend_resolution():
    assert kernel.resolve_backend("python") == "python"
    with pytest.raises(ValueError):
        kernel.resolve_backend("gpu")


# ---- the search loop

def test_trial_seed_is_stable():
    assert trial_seed(0, 0) == trial_seed(0, 0)
    assert len({trial_seed(0, i) for i in range(1000)}) == 1000
    assert 0 <= trial_seed(123, 45) < 2**64


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(m=5, n=2)
    with pytest.raises(ValueError):
        SearchConfig(epsilon=1.5)
    with pytest.raises(ValueError):
        SearchConfig.from_dict({"colour": 1})
    cfg = SearchConfig(seed=3)
    assert SearchConfig.from_dict(cfg.to_dict()) == cfg


def test_m1_never_succeeds():
    res = random_search(SearchConfig(m=1, max_trials=200))
    assert not res.success and res.trials == 200
    assert abs(res.max_ratio - 1) < 1e-8


def test_default_config_succeeds():
    res = random_search(SearchConfig(max_trials=10_000))
    assert res.success and res.max_ratio > 1.3
    b = res.best
    assert b.ratio <= np.sqrt(2) + 1e-6
    assert abs(b.ratio * b.colNormNP / b.rowNormNP - 1) <= 1e-8
    assert b.Ys.shape == (2, 2, 2)


def records(cfg, jobs):
    return [(r.trialIndex, r.seed, r.ratio, r.X.tobytes()) for r in iter_search(cfg, jobs)]


def test_stream_independent_of_jobs():
    cfg = SearchConfig(gamma=1.5, max_trials=600, batch_size=64)
    assert records(cfg, 1) == records(cfg, 3)


def test_stream_independent_of_batch_size():
    a = SearchConfig(gamma=1.5, max_trials=300, batch_size=64)
    b = SearchConfig(gamma=1.5, max_trials=300, batch_size=100)
    assert records(a, 1) == records(b, 1)


def test_backends_give_same_stream():
    cfg = SearchConfig(gamma=1.5, max_trials=200, backend="python")
    py = records(cfg, 1)
    if kernel.compiled_available():
        comp = records(SearchConfig(gamma=1.5, max_trials=200, backend="compiled"), 1)
        assert [r[:2] for r in py] == [r[:2] for r in comp]
        assert np.allclose([r[2] for r in py], [r[2] for r in comp], rtol=1e-10)


def test_emit_sees_every_record():
    seen = []
    res = random_search(SearchConfig(gamma=1.5, max_trials=100), emit=seen.append)
    assert len(seen) == res.trials - res.failures
    assert [r.trialIndex for r in seen] == sorted(r.trialIndex for r in seen)


def test_stops_at_first_success():
    cfg = SearchConfig(gamma=1.2, max_trials=1000)
    recs = list(iter_search(cfg))
    assert recs[-1].ratio > 1.2
    assert all(r.ratio <= 1.2 for r in recs[:-1])


def test_fixed_and_unnormalized_modes():
    fixed = list(iter_search(SearchConfig(epsilon_mode="fixed", gamma=1.5, max_trials=20)))
    assert {r.epsilon for r in fixed} == {0.01}
    raw = list(iter_search(SearchConfig(normalize=False, gamma=1.5, max_trials=20)))
    for r in raw:
        G = sum(x @ x.conj().T for x in r.X)
        assert abs(np.sqrt(np.linalg.eigvalsh(G)[-1]) - 0.9) < 1e-12


def test_timing_flag():
    recs = list(iter_search(SearchConfig(gamma=1.5, max_trials=10, timing=True)))
    assert all(r.elapsed_ms is not None and r.elapsed_ms > 0 for r in recs)
    recs = list(iter_search(SearchConfig(gamma=1.5, max_trials=10)))
    assert all(r.elapsed_ms is None for r in recs)
