# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors deepicmgp._core_py function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY
from scipy.linalg.cython_lapack cimport dpotrf, dtrtrs

cnp.import_array()

NAME = "compiled"

cdef enum:
    _OK = 0
    _OK_RETRIED = 1
    _KERNEL_NOT_PD = 2
    _DEGENERATE = 3

OK = _OK
OK_RETRIED = _OK_RETRIED
KERNEL_NOT_PD = _KERNEL_NOT_PD
DEGENERATE = _DEGENERATE


cdef inline double _sq(const double[:, ::1] A, Py_ssize_t i,
                       const double[:, ::1] B, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, t
    for k in range(A.shape[1]):
        t = A[i, k] - B[j, k]
        s += t * t
    return s


def sqdist(const double[:, ::1] A, const double[:, ::1] B):
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], i, j
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            for j in range(n):
                o[i, j] = _sq(A, i, B, j)
    return out


def cross_kernel(const double[:, ::1] A, const double[:, ::1] B, double theta):
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], i, j
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            for j in range(n):
                o[i, j] = exp(-_sq(A, i, B, j) / theta)
    return out


cdef void _fill_kernel(const double[:, ::1] A, double theta, double diag,
                       double[::1, :] K) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0], i, j
    cdef double v
    for j in range(n):
        K[j, j] = diag
        for i in range(j + 1, n):
            v = exp(-_sq(A, i, A, j) / theta)
            K[i, j] = v
            K[j, i] = v


def kernel_matrix(const double[:, ::1] A, double theta, double jitter):
    cdef Py_ssize_t n = A.shape[0]
    out = np.empty((n, n), order="F")
    cdef double[::1, :] K = out
    _fill_kernel(A, theta, 1.0 + jitter, K)
    # symmetric, so the transpose view is the C-ordered matrix
    return out.T


cdef int _chol(double[::1, :] K, double* logdet) noexcept nogil:
    cdef int n = <int>K.shape[0], info = 0, i
    cdef char uplo = b'L'
    dpotrf(&uplo, &n, &K[0, 0], &n, &info)
    if info != 0:
        return info
    logdet[0] = 0.0
    for i in range(n):
        logdet[0] += log(K[i, i])
    logdet[0] *= 2.0
    return 0


def layer_loglik(const double[:, ::1] Z, const double[:, ::1] M,
                 double theta, double jitter):
    cdef int n = <int>M.shape[0], S = <int>M.shape[1], info = 0
    cdef Py_ssize_t i, j, k
    cdef int status = _OK
    cdef double logdet_k = 0.0, logdet_g = 0.0, s
    cdef char uplo = b'L', trans = b'N', diag = b'N'
    Kbuf = np.empty((n, n), order="F")
    cdef double[::1, :] K = Kbuf
    Abuf = np.array(M, order="F", copy=True)
    cdef double[::1, :] A = Abuf
    Gbuf = np.empty((S, S), order="F")
    cdef double[::1, :] G = Gbuf

    with nogil:
        _fill_kernel(Z, theta, 1.0 + jitter, K)
        if _chol(K, &logdet_k) != 0:
            _fill_kernel(Z, theta, 1.0 + 100.0 * jitter, K)
            if _chol(K, &logdet_k) != 0:
                status = _KERNEL_NOT_PD
            else:
                status = _OK_RETRIED
    if status == _KERNEL_NOT_PD:
        return np.nan, status
    with nogil:
        dtrtrs(&uplo, &trans, &diag, &n, &S, &K[0, 0], &n, &A[0, 0], &n, &info)
        for i in range(S):
            for j in range(i, S):
                s = 0.0
                for k in range(n):
                    s += A[k, i] * A[k, j]
                G[i, j] = s
                G[j, i] = s
        info = _chol(G, &logdet_g)
    if info != 0:
        return np.nan, _DEGENERATE
    return -0.5 * S * logdet_k - 0.5 * n * logdet_g, status


def alc_sums(const double[:, ::1] KrT, const double[:, ::1] AcT,
             const double[::1] qr, const double[::1] v,
             const double[:, ::1] Wr, const double[:, ::1] Wc,
             double theta, int Q):
    cdef Py_ssize_t r = KrT.shape[0], c = AcT.shape[0]
    cdef Py_ssize_t i, j
    cdef int p
    cdef double dd, res, pw
    # the r x c cross products go through BLAS
    S_arr = np.ascontiguousarray(np.dot(np.asarray(KrT), np.asarray(AcT).T))
    cdef const double[:, ::1] S = S_arr
    out = np.zeros(c)
    cdef double[::1] o = out
    with nogil:
        for i in range(r):
            for j in range(c):
                dd = S[i, j] - exp(-_sq(Wr, i, Wc, j) / theta)
                res = 1.0 - qr[i] - dd * dd / v[j]
                if res < 0.0:
                    res = 0.0
                pw = 1.0
                for p in range(Q):
                    pw *= res
                o[j] += pw
    return out


def lhd_swaps(P_in, const long[::1] dims, const long[::1] rows_a,
              const long[::1] rows_b):
    P_arr = np.array(P_in, dtype=float, order="C", copy=True)
    cdef double[:, ::1] P = P_arr
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    if n < 2:
        return P_arr, np.inf
    D_arr = np.empty((n, n))
    cdef double[:, ::1] D = D_arr
    rowmin_arr = np.empty(n)
    rowarg_arr = np.empty(n, dtype=np.intp)
    cand_arr = np.empty(n)
    arg_arr = np.empty(n, dtype=np.intp)
    da_arr = np.empty(n)
    db_arr = np.empty(n)
    pa_arr = np.empty(d)
    pb_arr = np.empty(d)
    cdef double[::1] rowmin = rowmin_arr, cand = cand_arr, da = da_arr, db = db_arr
    cdef double[::1] pa = pa_arr, pb = pb_arr
    cdef Py_ssize_t[::1] rowarg = rowarg_arr, arg = arg_arr
    cdef Py_ssize_t i, j, t, k, a, b, r, best
    cdef double cur, new, s, u, dab, tmp, bestv
    cdef int idx_pair

    with nogil:
        for i in range(n):
            for j in range(n):
                D[i, j] = INFINITY if i == j else _sq(P, i, P, j)
        cur = INFINITY
        for i in range(n):
            best = 0
            bestv = INFINITY
            for j in range(n):
                if D[i, j] < bestv:
                    bestv = D[i, j]
                    best = j
            rowmin[i] = bestv
            rowarg[i] = best
            if bestv < cur:
                cur = bestv

        for t in range(dims.shape[0]):
            k = dims[t]
            a = rows_a[t]
            b = rows_b[t]
            for j in range(d):
                pa[j] = P[a, j]
                pb[j] = P[b, j]
            tmp = pa[k]
            pa[k] = pb[k]
            pb[k] = tmp
            dab = 0.0
            for j in range(d):
                u = pa[j] - pb[j]
                dab += u * u
            for i in range(n):
                s = 0.0
                for j in range(d):
                    u = P[i, j] - pa[j]
                    s += u * u
                da[i] = s
                s = 0.0
                for j in range(d):
                    u = P[i, j] - pb[j]
                    s += u * u
                db[i] = s
            da[a] = INFINITY
            da[b] = dab
            db[b] = INFINITY
            db[a] = dab

            for i in range(n):
                cand[i] = rowmin[i]
                arg[i] = rowarg[i]
                if da[i] < cand[i]:
                    cand[i] = da[i]
                    arg[i] = a
                if db[i] < cand[i]:
                    cand[i] = db[i]
                    arg[i] = b
            for r in range(n):
                if r == a or r == b:
                    continue
                if rowarg[r] != a and rowarg[r] != b:
                    continue
                best = 0
                bestv = INFINITY
                for j in range(n):
                    if j == a:
                        s = da[r]
                    elif j == b:
                        s = db[r]
                    else:
                        s = D[r, j]
                    if s < bestv:
                        bestv = s
                        best = j
                cand[r] = bestv
                arg[r] = best
            for idx_pair in range(2):
                r = a if idx_pair == 0 else b
                best = 0
                bestv = INFINITY
                for j in range(n):
                    s = da[j] if r == a else db[j]
                    if s < bestv:
                        bestv = s
                        best = j
                cand[r] = bestv
                arg[r] = best
            new = INFINITY
            for i in range(n):
                if cand[i] < new:
                    new = cand[i]
            if new >= cur:
                for j in range(d):
                    P[a, j] = pa[j]
                    P[b, j] = pb[j]
                for i in range(n):
                    D[a, i] = da[i]
                    D[i, a] = da[i]
                    D[b, i] = db[i]
                    D[i, b] = db[i]
                    rowmin[i] = cand[i]
                    rowarg[i] = arg[i]
                cur = new
    return P_arr, cur
