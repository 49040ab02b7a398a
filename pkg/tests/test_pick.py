import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncpick.asymptotics import direct_sum, direct_sum_preconditioner
from ncpick.errors import (DimensionError, NotHermitian, NotInAlgebra, NotInCommutant,
                           NotInvertible, NotPSD, SingularResolvent)
from ncpick.ncpoly import words_up_to, eval_word
from ncpick.pick import (BlockTarget, RowTuple, alg_member, bundle_from_matrix, choi_series,
                         conjugated_target, criterion_matrix, feasible, np_norm,
                         np_norm_preconditioned, pick_matrix, pick_series,
                         preconditioned_bundle, row_norm, series_tail_bound, transfer)
from ncpick.tensor import choi_matrix, psi, unvec, vec
from ncpick.zoo import choi_point, shift_dft

from conftest import cgauss, contraction, unit


def scalar(x):
    return np.array([[[x]]], dtype=complex)


def alg_target(B, rng, s=1, t=1):
    n = B.n
    blocks = np.empty((s, t, n, n), dtype=complex)
    for a in range(s):
        for b in range(t):
            blocks[a, b] = unvec(B.projQ @ vec(cgauss(rng, (n, n))), n)
    return BlockTarget(blocks)


# ---- row norm, transfer, Pick matrix

def test_row_norm_examples(rng):
    assert row_norm(np.zeros((3, 2, 2))) == 0
    assert abs(row_norm(shift_dft(3)) - 1) < 1e-12
    X = cgauss(rng, (2, 3, 3))
    assert abs(row_norm(0.37 * X) - 0.37 * row_norm(X)) < 1e-12


def test_transfer_examples(rng):
    assert np.isclose(transfer(scalar(0.3 + 0.4j))[0, 0], 0.25)
    X = shift_dft(3)
    assert np.allclose(transfer(X) @ vec(np.eye(3)), vec(np.eye(3)), atol=1e-12)
    Y = contraction(rng, 3, 2, 0.7)
    G = sum(y @ y.conj().T for y in Y)
    assert np.allclose(transfer(Y) @ vec(np.eye(3)), vec(G), atol=1e-12)
    T = transfer(choi_point(2))
    assert np.allclose(T, choi_matrix(2) / 2, atol=1e-12)
    assert np.allclose(T @ T, T, atol=1e-12)


@pytest.mark.parametrize("x", [0.5, 0.3 - 0.6j, 0.0])
def test_scalar_pick(x):
    B = pick_matrix(scalar(x))
    assert np.isclose(B.P[0, 0], 1 / (1 - abs(x) ** 2), rtol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("t", [0.5, 0.8, 0.99])
def test_choi_point_closed_form(n, t):
    P = pick_matrix(choi_point(n).scaled(t)).P
    ref = choi_matrix(n) + t * t / (n * (1 - t * t)) * np.eye(n * n)
    assert np.linalg.norm(P - ref, 2) <= 1e-10 * np.linalg.norm(ref, 2)


def test_choi_point_eight_ninths():
    P = pick_matrix(choi_point(2).scaled(0.8)).P
    assert np.allclose(P, choi_matrix(2) + 8 / 9 * np.eye(4), atol=1e-12)


def test_pick_series_examples():
    assert np.array_equal(pick_series(shift_dft(2).scaled(0.5), 0), np.eye(4))
    assert np.isclose(pick_series(scalar(0.5), 3)[0, 0], 85 / 64, rtol=1e-15)


def test_pick_series_word_oracle(rng):
    X = contraction(rng, 2, 2, 0.6)
    direct = sum(np.kron(eval_word(w, X).conj(), eval_word(w, X)) for w in words_up_to(2, 4))
    assert np.allclose(pick_series(X, 4), direct, atol=1e-13)


@pytest.mark.parametrize("L", [0, 1, 3, 6])
def test_truncated_series_forms_agree(L, rng):
    X = contraction(rng, 2, 3, 0.8)
    assert np.allclose(psi(pick_series(X, L)), choi_series(X, L), atol=1e-10)


def test_pick_matrix_within_tail_bound(rng):
    X = contraction(rng, 3, 2, 0.85)
    for L in (4, 8, 12):
        err = np.linalg.norm(psi(pick_series(X, L)) - pick_matrix(X).P, 2)
        assert err <= series_tail_bound(X, L) + 1e-12


def test_bundle_invariants(rng):
    B = pick_matrix(contraction(rng, 3, 2, 0.9))
    nP = np.linalg.norm(B.P, 2)
    assert np.linalg.norm(B.P - B.P.conj().T) <= 1e-12 * nP
    assert np.linalg.eigvalsh(B.P)[0] >= -B.psdTol * nP
    assert np.linalg.norm(B.sqrtP @ B.sqrtP - B.P, 2) <= 1e-10 * nP
    for M in (B.pinvSqrtP @ B.sqrtP, B.sqrtP @ B.pinvSqrtP):
        assert np.allclose(M, B.projQ, atol=1e-10)
    assert np.allclose(B.projQ @ B.projQ, B.projQ, atol=1e-10)
    assert np.allclose(B.projQ, B.projQ.conj().T, atol=1e-12)


def test_pick_refuses_boundary():
    with pytest.raises(SingularResolvent):
        pick_matrix(shift_dft(2))


def test_bundle_rejects_bad_matrices():
    with pytest.raises(NotHermitian):
        bundle_from_matrix(np.array([[1, 1], [0, 1]], dtype=complex).repeat(2, 0).repeat(2, 1))
    with pytest.raises(NotPSD):
        bundle_from_matrix(np.diag([1.0, -1.0, 1.0, 1.0]))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 4), d=st.integers(1, 3), r=st.floats(0.05, 0.95),
       seed=st.integers(0, 2**32 - 1))
def test_recursion_sums_to_choi(n, d, r, seed):
    X = contraction(np.random.default_rng(seed), n, d, r)
    P = pick_matrix(X).P
    S = sum(np.kron(x.T, np.eye(n)) @ P @ np.kron(x.conj(), np.eye(n)) for x in X)
    assert np.linalg.norm(P - S - choi_matrix(n), 2) <= 1e-9 * np.linalg.norm(P, 2)


# ---- algebra membership

def test_alg_member_examples(rng):
    X = np.array([np.diag([0, 0.5])], dtype=complex)
    B = pick_matrix(X)
    assert B.rank == 2
    assert alg_member(unit(2, 0, 0), B).member
    m = alg_member(unit(2, 0, 1), B)
    assert not m.member and m.residual > 0.5
    Bf = pick_matrix(shift_dft(2).scaled(0.9))
    assert Bf.rank == 4
    assert alg_member(cgauss(rng, (2, 2)), Bf).member
    for X in (contraction(rng, 3, 1, 0.5), np.array([np.diag([0, 0.5])])):
        assert alg_member(np.eye(X.shape[1]), pick_matrix(X)).member


def test_alg_member_dimension_check():
    with pytest.raises(DimensionError):
        alg_member(np.eye(3), pick_matrix(shift_dft(2).scaled(0.5)))


# ---- criterion matrix and feasibility

def test_criterion_scalar_cases():
    K = criterion_matrix(pick_matrix(scalar(0)), BlockTarget.single([[0.6]]))
    assert np.isclose(K[0, 0], 1 - 0.36)
    x, y = 0.4 + 0.2j, 0.5 - 0.1j
    K = criterion_matrix(pick_matrix(scalar(x)), BlockTarget.single([[y]]))
    assert np.isclose(K[0, 0], (1 - abs(y) ** 2) / (1 - abs(x) ** 2), rtol=1e-13)


def criterion_oracle(X, Y: BlockTarget, L):
    """sum_ij E_ij (x) Phi(E_ij), Phi summed word by word, Yhat built by kron."""
    n, s, t = X.shape[1], Y.s, Y.t
    Yhat = sum(np.kron(Y.blocks[a, b], unit(max(s, t), a, b)[:s, :t])
               for a in range(s) for b in range(t))
    ws = words_up_to(X.shape[0], L)
    Xw = [eval_word(w, X) for w in ws]

    def phi(H):
        out = np.zeros((n * s, n * s), dtype=complex)
        for M in Xw:
            G = M @ H @ M.conj().T
            out += np.kron(G, np.eye(s)) - Yhat @ np.kron(G, np.eye(t)) @ Yhat.conj().T
        return out

    return sum(np.kron(unit(n, i, j), phi(unit(n, i, j))) for i in range(n) for j in range(n))


@pytest.mark.parametrize("s,t", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_criterion_matches_brute_force(s, t, rng):
    X = contraction(rng, 2, 2, 0.3)
    Y = BlockTarget(cgauss(rng, (s, t, 2, 2)) / 2)
    L = 9
    K = criterion_matrix(pick_matrix(X), Y)
    Yn = np.linalg.norm(Y.matrix(), 2)
    bound = (1 + Yn ** 2) * series_tail_bound(X, L) * max(s, t) + 1e-12
    assert np.linalg.norm(K - criterion_oracle(X, Y, L), 2) <= bound


def test_feasible_examples():
    f = feasible(pick_matrix(scalar(0)), BlockTarget.single([[0.9]]))
    assert f.feasible and np.isclose(f.margin, 0.19)
    f = feasible(pick_matrix(scalar(0)), BlockTarget.single([[1.1]]))
    assert not f.feasible and np.isclose(f.margin, -0.21)
    X = np.array([np.diag([0, 0.5])], dtype=complex)
    f = feasible(pick_matrix(X), BlockTarget.single(np.diag([0, 0.5])))
    assert f.feasible and abs(f.margin) < 1e-9


def test_feasible_not_in_algebra():
    X = np.array([np.diag([0, 0.5])], dtype=complex)
    with pytest.raises(NotInAlgebra) as exc:
        feasible(pick_matrix(X), BlockTarget.row([np.eye(2), unit(2, 0, 1)]))
    (ab, resid), = exc.value.offending
    assert ab == (0, 1) and resid > 0.5


def test_target_dimension_mismatch():
    with pytest.raises(DimensionError):
        criterion_matrix(pick_matrix(scalar(0.1)), BlockTarget.single(np.eye(2)))


# ---- NP norm

def test_conjugated_target_examples(rng):
    C = conjugated_target(pick_matrix(scalar(0)), BlockTarget.single([[0.3j]]))
    assert np.isclose(C[0, 0], 0.3j)
    B = pick_matrix(contraction(rng, 2, 1, 0.6))
    assert np.allclose(conjugated_target(B, BlockTarget.single(np.eye(2))), B.projQ, atol=1e-10)


def test_np_norm_examples():
    assert np.isclose(np_norm(pick_matrix(scalar(0)), BlockTarget.single([[-0.7]])), 0.7)
    X = np.array([np.diag([0, 0.5])], dtype=complex)
    v = np_norm(pick_matrix(X), BlockTarget.single(np.diag([0, 0.5])))
    assert abs(v - 1) < 1e-8


def test_np_norm_not_in_algebra():
    X = np.array([np.diag([0, 0.5])], dtype=complex)
    with pytest.raises(NotInAlgebra):
        np_norm(pick_matrix(X), BlockTarget.single(unit(2, 0, 1)))


@pytest.mark.parametrize("shape", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_np_norm_floor(shape, rng):
    for _ in range(5):
        B = pick_matrix(contraction(rng, 2, 2, 0.8))
        Y = alg_target(B, rng, *shape)
        assert np_norm(B, Y) >= Y.norm() - 1e-8


def test_np_norm_equals_conjugated_norm(rng):
    B = pick_matrix(contraction(rng, 3, 2, 0.7))
    Y = alg_target(B, rng, 2, 3)
    assert np.isclose(np_norm(B, Y), np.linalg.norm(conjugated_target(B, Y), 2), rtol=1e-12)


def test_feasibility_norm_duality(rng):
    B = pick_matrix(shift_dft(2).scaled(0.9))
    for _ in range(4):
        Y = alg_target(B, rng, 1, 2)
        v = np_norm(B, Y)
        for c in np.linspace(0.5, 2.0, 16) * v:
            if abs(c - v) <= 1e-6 * v:
                continue
            assert feasible(B, Y.scaled(1 / c)).feasible == (v <= c * (1 + 1e-7))


def test_np_norm_unitary_invariance(rng):
    X = contraction(rng, 3, 2, 0.8)
    B = pick_matrix(X)
    Y = alg_target(B, rng, 1, 2)
    U = np.linalg.qr(cgauss(rng, (3, 3)))[0]
    Xu = np.array([U.conj().T @ x @ U for x in X])
    Yu = BlockTarget(np.einsum("ij,abjk,kl->abil", U.conj().T, Y.blocks, U))
    assert abs(np_norm(pick_matrix(Xu), Yu) - np_norm(B, Y)) < 1e-8


# ---- preconditioning

def test_preconditioned_identity_is_same_path(rng):
    B = pick_matrix(contraction(rng, 2, 2, 0.8))
    Y = alg_target(B, rng)
    assert np_norm_preconditioned(B, Y, np.eye(4)) == np_norm(B, Y)
    assert abs(np_norm_preconditioned(B, Y, 2 * np.eye(4)) - np_norm(B, Y)) < 1e-8


def test_preconditioned_direct_sum(rng):
    t = 0.99
    X1 = RowTuple(contraction(rng, 2, 2, 0.5))
    X = direct_sum(X1, shift_dft(2).scaled(t))
    B = pick_matrix(X)
    D = direct_sum_preconditioner(2, 2, t)
    Y = alg_target(B, rng)
    assert abs(np_norm_preconditioned(B, Y, D) - np_norm(B, Y)) < 1e-6
    assert preconditioned_bundle(B, D).condition() < B.condition()


def test_preconditioner_errors(rng):
    B = pick_matrix(shift_dft(2).scaled(0.8))
    Y = BlockTarget.single(np.eye(2))
    with pytest.raises(NotInCommutant):
        np_norm_preconditioned(B, Y, cgauss(rng, (4, 4)))
    with pytest.raises(NotInvertible):
        np_norm_preconditioned(B, Y, np.kron(np.diag([1.0, 0.0]), np.eye(2)))


# ---- data types

def test_block_target_layout(rng):
    Ys = cgauss(rng, (3, 2, 2))
    row, col = BlockTarget.row(list(Ys)), BlockTarget.column(list(Ys))
    assert np.allclose(row.matrix(), np.hstack(list(Ys)))
    assert np.allclose(col.matrix(), np.vstack(list(Ys)))
    M = cgauss(rng, (4, 6))
    assert np.array_equal(BlockTarget.from_matrix(M, 2).matrix(), M)


def test_row_tuple_validation():
    with pytest.raises(DimensionError):
        RowTuple(np.zeros((2, 2, 3)))
