# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mining kernels; same contracts as ``semzsl._pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

KIND_SIMILAR = 0
KIND_DISSIMILAR = 1


cdef inline double _dot(const double[:, ::1] a, Py_ssize_t i,
                        const double[:, ::1] b, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t k, n = a.shape[1]
    cdef double acc = 0.0
    for k in range(n):
        acc += a[i, k] * b[j, k]
    if acc > 1.0:
        return 1.0
    if acc < -1.0:
        return -1.0
    return acc


def pair_cosines(const double[:, ::1] fhat, const double[:, ::1] xhat, f_rows, x_rows):
    cdef const long long[::1] fr = np.ascontiguousarray(f_rows, dtype=np.int64)
    cdef const long long[::1] xr = np.ascontiguousarray(x_rows, dtype=np.int64)
    cdef Py_ssize_t b, n = fr.shape[0]
    if xr.shape[0] != n:
        raise ValueError("row index arrays differ in length")
    if fhat.shape[1] != xhat.shape[1]:
        raise ValueError("dimension mismatch")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for b in range(n):
            o[b] = _dot(fhat, fr[b], xhat, xr[b])
    return out


def select_hardest(const double[:, ::1] fhat, const double[:, ::1] xhat, ref_class,
                   cand, cand_delta, double tau, int kind):
    cdef const long long[::1] rc = np.ascontiguousarray(ref_class, dtype=np.int64)
    cdef const long long[:, ::1] c = np.ascontiguousarray(cand, dtype=np.int64)
    cdef const double[:, ::1] dl = np.ascontiguousarray(cand_delta, dtype=np.float64)
    cdef Py_ssize_t nb = c.shape[0], p = c.shape[1], b, q
    cdef long long idx, arg
    cdef double s, score, top
    if fhat.shape[1] != xhat.shape[1]:
        raise ValueError("dimension mismatch")
    choice = np.full(nb, -1, dtype=np.int64)
    best = np.full(nb, np.nan)
    cdef long long[::1] ch = choice
    cdef double[::1] bs = best
    with nogil:
        for b in range(nb):
            if p == 0 or c[b, 0] < 0:
                continue
            arg = -1
            top = 0.0
            for q in range(p):
                idx = c[b, q]
                s = _dot(fhat, rc[b], xhat, idx)
                if kind == 0:
                    score = 0.0
                    if tau - s > 0.0:
                        score = score + (tau - s)
                    if s - dl[b, q] > 0.0:
                        score = score + (s - dl[b, q])
                else:
                    score = (tau - dl[b, q]) * s
                if arg < 0 or score > top:
                    arg = idx
                    top = score
            ch[b] = arg
            bs[b] = top
    return choice, best
