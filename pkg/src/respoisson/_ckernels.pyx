# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for polynomial/kernel evaluation and Gegenbauer sums.

Mirrors ``_kernels_py`` exactly; the Python package picks one at import.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


DEF BLOCK = 512


cdef inline void _fill_block(const double[:, ::1] P, Py_ssize_t i0, Py_ssize_t nb, int n,
                             int stride, double* table) noexcept nogil:
    # table[(d * stride + k) * BLOCK + b] = P[i0 + b, d] ** k
    cdef int d, k
    cdef Py_ssize_t b
    cdef double* row
    cdef double* prev
    for d in range(n):
        row = table + (d * stride) * BLOCK
        for b in range(nb):
            row[b] = 1.0
        for k in range(1, stride):
            prev = row
            row = table + (d * stride + k) * BLOCK
            for b in range(nb):
                row[b] = prev[b] * P[i0 + b, d]


cdef inline void _accumulate(const long long[:, ::1] E, const double[::1] C, Py_ssize_t j,
                             int n, Py_ssize_t nb, const double* table, const double* scale,
                             double* work, double* acc) noexcept nogil:
    cdef Py_ssize_t b
    cdef int d
    cdef const double* row
    cdef double c = C[j]
    if scale == NULL:
        for b in range(nb):
            work[b] = c
    else:
        for b in range(nb):
            work[b] = c * scale[b]
    for d in range(n):
        row = table + E[j, d] * BLOCK
        for b in range(nb):
            work[b] = work[b] * row[b]
    for b in range(nb):
        acc[b] = acc[b] + work[b]


def _offsets(exps, int n, int stride):
    e = np.ascontiguousarray(exps, dtype=np.int64)
    return np.ascontiguousarray(e + (np.arange(n, dtype=np.int64) * stride)[None, :])


def poly_eval(pts, exps, coeffs):
    cdef const double[:, ::1] P = np.ascontiguousarray(pts, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t p = P.shape[0], t = C.shape[0], i0, j, nb
    cdef int n = P.shape[1], stride
    out = np.zeros(p)
    if p == 0 or t == 0:
        return out
    stride = int(np.asarray(exps).max()) + 1
    cdef const long long[:, ::1] E = _offsets(exps, n, stride)
    cdef double[::1] O = out
    cdef double[::1] table = np.empty(n * stride * BLOCK)
    cdef double[::1] work = np.empty(BLOCK)
    with nogil:
        i0 = 0
        while i0 < p:
            nb = min(BLOCK, p - i0)
            _fill_block(P, i0, nb, n, stride, &table[0])
            for j in range(t):
                _accumulate(E, C, j, n, nb, &table[0], NULL, &work[0], &O[i0])
            i0 += nb
    return out


def radial_poly_eval(pts, exps, coeffs, rpow):
    cdef const double[:, ::1] P = np.ascontiguousarray(pts, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef const double[::1] S = np.ascontiguousarray(rpow, dtype=np.float64)
    cdef Py_ssize_t p = P.shape[0], t = C.shape[0], i0, j, nb, b
    cdef int n = P.shape[1], stride, d
    out = np.zeros(p)
    if p == 0 or t == 0:
        return out
    stride = int(np.asarray(exps).max()) + 1
    cdef const long long[:, ::1] E = _offsets(exps, n, stride)
    cdef double[::1] O = out
    cdef double[::1] table = np.empty(n * stride * BLOCK)
    cdef double[::1] work = np.empty(BLOCK)
    cdef double[::1] r2 = np.empty(BLOCK)
    cdef double[::1] fac = np.empty(BLOCK)
    cdef double last_s
    with nogil:
        i0 = 0
        while i0 < p:
            nb = min(BLOCK, p - i0)
            _fill_block(P, i0, nb, n, stride, &table[0])
            for b in range(nb):
                r2[b] = 0.0
                for d in range(n):
                    r2[b] = r2[b] + P[i0 + b, d] * P[i0 + b, d]
            last_s = -1.0e300
            for j in range(t):
                if S[j] != last_s:
                    last_s = S[j]
                    for b in range(nb):
                        fac[b] = pow(r2[b], -0.5 * last_s)
                _accumulate(E, C, j, n, nb, &table[0], &fac[0], &work[0], &O[i0])
            i0 += nb
    return out


def gegenbauer_table(int L, double rho, t):
    t_arr = np.asarray(t, dtype=np.float64)
    flat = np.ascontiguousarray(t_arr.ravel())
    cdef const double[::1] T = flat
    cdef Py_ssize_t p = T.shape[0], i
    cdef int l
    res = np.empty((L + 1, p))
    cdef double[:, ::1] R = res
    cdef double a, b
    with nogil:
        for i in range(p):
            R[0, i] = 1.0
        if L >= 1:
            for i in range(p):
                R[1, i] = 2.0 * rho * T[i]
        for l in range(2, L + 1):
            a = 2.0 * (l + rho - 1.0) / l
            b = (l + 2.0 * rho - 2.0) / l
            for i in range(p):
                R[l, i] = a * T[i] * R[l - 1, i] - b * R[l - 2, i]
    return res.reshape((L + 1,) + t_arr.shape)


def gegenbauer_series(int L, double rho, t, a):
    tb, ab = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(a, dtype=np.float64))
    shape = tb.shape
    cdef const double[::1] T = np.ascontiguousarray(tb.ravel())
    cdef const double[::1] A = np.ascontiguousarray(ab.ravel())
    cdef Py_ssize_t p = T.shape[0], i
    cdef int l
    res = np.empty(p)
    cdef double[::1] R = res
    cdef double c_prev, c, c_next, apow, total
    with nogil:
        for i in range(p):
            total = 1.0
            if L >= 1:
                c_prev = 1.0
                c = 2.0 * rho * T[i]
                apow = A[i]
                total = total + c * apow
                for l in range(2, L + 1):
                    c_next = (2.0 * T[i] * (l + rho - 1.0) * c - (l + 2.0 * rho - 2.0) * c_prev) / l
                    c_prev = c
                    c = c_next
                    apow = apow * A[i]
                    total = total + c * apow
            R[i] = total
    return res.reshape(shape)
