# cython: language_level=3
"""Compiled batch kernel for the column-row search loop.

For each node in a batch: build ``I - T``, invert it (zgesv), apply psi,
diagonalise (zheev), form ``P^{1/2}`` and ``P^{+/2}``, pick the ``m``
eigenvectors with the smallest kept eigenvalues, and return the NP norms of
the row and column targets built from them. All matrices are stored
column-major in flat work buffers.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport zgesv, zheev
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

ctypedef double complex z

# status codes, mirrored in ncpick.kernel
DEF OK = 0
DEF SINGULAR = 1
DEF NOT_HERMITIAN = 2
DEF NOT_PSD = 3
DEF RANK_TOO_SMALL = 4
DEF TIE = 5
DEF LAPACK_FAIL = 6

cdef inline double cabs2(z a) nogil:
    return a.real * a.real + a.imag * a.imag


cdef int top_eig(z* a, int N, double* w, z* work, int lwork, double* rwork, double* out) nogil:
    cdef char jobz = b'N'
    cdef char uplo = b'U'
    cdef int info = 0
    zheev(&jobz, &uplo, &N, a, &N, w, work, &lwork, rwork, &info)
    out[0] = w[N - 1]
    return info


cdef int one_trial(const z* X, int d, int n, int m, double rank_tol, double psd_tol,
                   double herm_tol, double tie_tol, bint transpose,
                   z* A, z* R, z* V, z* S, z* Pi, z* C, z* M, z* Rs, z* Cs,
                   int* ipiv, double* w, double* w2, z* work, int lwork, double* rwork,
                   double* row_out, double* col_out, z* Y_out) nogil:
    cdef int N = n * n
    cdef int a, i, j, k, l, r, c, e, b, q, idx0, kept, info = 0, first
    cdef z acc, ph, one = 1.0, zero = 0.0
    cdef double top, scale, asym, root, mag, lam
    cdef char jobz = b'V'
    cdef char uplo = b'U'
    cdef char tn = b'N'
    cdef char tc = b'C'
    cdef const z* Xa

    # A = I - T, T[(i,k),(j,l)] = sum_a conj(X_a[i,j]) X_a[k,l]; X row-major (d,n,n)
    for c in range(N * N):
        A[c] = 0.0
        R[c] = 0.0
    for a in range(d):
        Xa = X + a * N
        for i in range(n):
            for j in range(n):
                ph = Xa[i * n + j].conjugate()
                if ph == 0:
                    continue
                for k in range(n):
                    for l in range(n):
                        A[(i * n + k) + N * (j * n + l)] -= ph * Xa[k * n + l]
    for r in range(N):
        A[r + N * r] += 1.0
        R[r + N * r] = 1.0
    zgesv(&N, &N, A, &N, ipiv, R, &N, &info)
    if info != 0:
        return SINGULAR

    # P = psi(R): P[(l,k),(j,i)] = R[(i,k),(j,l)]
    scale = 0.0
    for i in range(n):
        for k in range(n):
            for j in range(n):
                for l in range(n):
                    V[(l * n + k) + N * (j * n + i)] = R[(i * n + k) + N * (j * n + l)]
    asym = 0.0
    for c in range(N):
        for r in range(N):
            mag = cabs2(V[r + N * c])
            if mag > scale:
                scale = mag
            mag = cabs2(V[r + N * c] - V[c + N * r].conjugate())
            if mag > asym:
                asym = mag
    scale = sqrt(scale)
    if sqrt(asym) > herm_tol * (scale if scale > 1.0 else 1.0):
        return NOT_HERMITIAN
    for c in range(N):
        for r in range(c + 1):
            acc = 0.5 * (V[r + N * c] + V[c + N * r].conjugate())
            V[r + N * c] = acc
            V[c + N * r] = acc.conjugate()

    zheev(&jobz, &uplo, &N, V, &N, w, work, &lwork, rwork, &info)
    if info != 0:
        return LAPACK_FAIL
    top = w[N - 1]
    if top <= 0 or w[0] < -psd_tol * top:
        return NOT_PSD
    idx0 = N
    for k in range(N):
        if w[k] > rank_tol * top:
            idx0 = k
            break
    kept = N - idx0
    if kept < m:
        return RANK_TOO_SMALL
    for k in range(idx0, idx0 + m):
        if k + 1 < N and w[k + 1] - w[k] <= tie_tol * top:
            return TIE

    # S = V diag(sqrt w) V^*, Pi = V_kept diag(1/sqrt w) V_kept^*
    for c in range(N):
        for r in range(N):
            S[r + N * c] = 0.0
            Pi[r + N * c] = 0.0
    for k in range(N):
        root = sqrt(w[k]) if w[k] > 0 else 0.0
        for c in range(N):
            ph = V[c + N * k].conjugate()
            for r in range(N):
                acc = V[r + N * k] * ph
                S[r + N * c] += root * acc
                if k >= idx0:
                    Pi[r + N * c] += acc / root

    for c in range(N * N):
        Rs[c] = 0.0
        Cs[c] = 0.0
    for q in range(m):
        k = idx0 + q
        # phase: first entry with modulus above 1e-12 made real positive
        ph = 1.0
        for r in range(N):
            mag = sqrt(cabs2(V[r + N * k]))
            if mag > 1e-12:
                ph = V[r + N * k].conjugate() / mag
                break
        # Y row-major into Y_out[q]; transpose: Y[i,j] = v[n*i+j]; literal: Y[i,j] = v[n*j+i]
        for i in range(n):
            for j in range(n):
                if transpose:
                    Y_out[q * N + i * n + j] = ph * V[(n * i + j) + N * k]
                else:
                    Y_out[q * N + i * n + j] = ph * V[(n * j + i) + N * k]
        # C = (I (x) Y) S: C[(a,b), col] = sum_e Y[b,e] S[(a,e), col]
        for c in range(N):
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for e in range(n):
                        acc = acc + Y_out[q * N + b * n + e] * S[(a * n + e) + N * c]
                    C[(a * n + b) + N * c] = acc
        zgemm(&tn, &tn, &N, &N, &N, &one, Pi, &N, C, &N, &zero, M, &N)
        zgemm(&tn, &tc, &N, &N, &N, &one, M, &N, M, &N, &one, Rs, &N)
        zgemm(&tc, &tn, &N, &N, &N, &one, M, &N, M, &N, &one, Cs, &N)

    info = top_eig(Rs, N, w2, work, lwork, rwork, &lam)
    if info != 0:
        return LAPACK_FAIL
    row_out[0] = sqrt(lam) if lam > 0 else 0.0
    info = top_eig(Cs, N, w2, work, lwork, rwork, &lam)
    if info != 0:
        return LAPACK_FAIL
    col_out[0] = sqrt(lam) if lam > 0 else 0.0
    return OK


def colrow_batch(X, int m, double rank_tol=1e-10, double psd_tol=1e-9,
                 double herm_tol=1e-10, double tie_tol=1e-10, bint transpose=True):
    """Row and column NP norms for a batch of nodes of shape ``(B, d, n, n)``.

    Returns ``(row, col, status, Ys)`` with ``Ys`` of shape ``(B, m, n, n)``.
    """
    cdef cnp.ndarray[z, ndim=4, mode="c"] Xc = np.ascontiguousarray(X, dtype=np.complex128)
    cdef int Bn = Xc.shape[0], d = Xc.shape[1], n = Xc.shape[2]
    if Xc.shape[3] != n:
        raise ValueError("node matrices must be square")
    if m < 1:
        raise ValueError("m must be positive")
    cdef int N = n * n
    cdef int lwork = 4 * N + 8
    row = np.zeros(Bn)
    col = np.zeros(Bn)
    status = np.zeros(Bn, dtype=np.int32)
    Ys = np.zeros((Bn, m, n, n), dtype=np.complex128)
    cdef double[::1] row_v = row
    cdef double[::1] col_v = col
    cdef int[::1] st_v = status
    cdef z[:, :, :, ::1] Y_v = Ys
    cdef z* buf = <z*> malloc(9 * N * N * sizeof(z) + lwork * sizeof(z))
    cdef int* ipiv = <int*> malloc(N * sizeof(int))
    cdef double* dbuf = <double*> malloc((2 * N + 3 * N) * sizeof(double))
    if buf == NULL or ipiv == NULL or dbuf == NULL:
        free(buf); free(ipiv); free(dbuf)
        raise MemoryError()
    cdef int b, NN = N * N
    try:
        with nogil:
            for b in range(Bn):
                st_v[b] = one_trial(&Xc[b, 0, 0, 0], d, n, m, rank_tol, psd_tol, herm_tol,
                                    tie_tol, transpose,
                                    buf, buf + NN, buf + 2 * NN, buf + 3 * NN, buf + 4 * NN,
                                    buf + 5 * NN, buf + 6 * NN, buf + 7 * NN, buf + 8 * NN,
                                    ipiv, dbuf, dbuf + N, buf + 9 * NN, lwork, dbuf + 2 * N,
                                    &row_v[b], &col_v[b], &Y_v[b, 0, 0, 0])
    finally:
        free(buf)
        free(ipiv)
        free(dbuf)
    return row, col, status, Ys
