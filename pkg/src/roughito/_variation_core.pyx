# cython: language_level=3
"""Compiled p-variation dynamic programme.

Same contract as ``_variation_py``: maximise ``sum w(i, j)**power`` over grid
sub-partitions with ``best[j] = max_{i<j} best[i] + w(i, j)**power``.
Increments are formed on the fly so memory stays O(N).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()


cdef inline double _powr(double w, double power) nogil:
    if power == 1.0:
        return w
    if power == 2.0:
        return w * w
    if w == 0.0:
        return 0.0
    return pow(w, power)


def sup_sum_vector(x, double power):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    cdef double[::1] best = np.zeros(n)
    cdef Py_ssize_t i, j, a
    cdef double s, t, cand, top
    with nogil:
        for j in range(1, n):
            top = 0.0
            for i in range(j):
                s = 0.0
                for a in range(d):
                    t = xv[j, a] - xv[i, a]
                    s += t * t
                cand = best[i] + _powr(sqrt(s), power)
                if cand > top:
                    top = cand
            best[j] = top
    return best[n - 1] if n > 0 else 0.0


cdef inline double _level2_sq(const double[:, ::1] x1, const double[:, ::1] x2,
                              Py_ssize_t i, Py_ssize_t j, Py_ssize_t d) nogil:
    # squared Frobenius norm of x2_j - x2_i - x1_i (x) (x1_j - x1_i)
    cdef Py_ssize_t a, b
    cdef double s = 0.0, t
    for a in range(d):
        for b in range(d):
            t = x2[j, a * d + b] - x2[i, a * d + b] - x1[i, a] * (x1[j, b] - x1[i, b])
            s += t * t
    return s


def sup_sum_depth2(x1, x2, double power, int mode):
    cdef const double[:, ::1] v1 = np.ascontiguousarray(x1, dtype=np.float64)
    cdef const double[:, ::1] v2 = np.ascontiguousarray(x2, dtype=np.float64)
    cdef Py_ssize_t n = v1.shape[0], d = v1.shape[1]
    cdef double[::1] best = np.zeros(n)
    cdef Py_ssize_t i, j, a
    cdef double s1, s2, t, w, cand, top
    with nogil:
        for j in range(1, n):
            top = 0.0
            for i in range(j):
                s1 = 0.0
                s2 = 0.0
                if mode != 2:
                    for a in range(d):
                        t = v1[j, a] - v1[i, a]
                        s1 += t * t
                if mode != 1:
                    s2 = _level2_sq(v1, v2, i, j, d)
                if mode == 1:
                    w = sqrt(s1)
                elif mode == 2:
                    w = sqrt(s2)
                else:
                    w = sqrt(s1) + sqrt(sqrt(s2))
                cand = best[i] + _powr(w, power)
                if cand > top:
                    top = cand
            best[j] = top
    return best[n - 1] if n > 0 else 0.0


def sup_sum_level2_diff(x1, x2, y1, y2, double power):
    cdef const double[:, ::1] a1 = np.ascontiguousarray(x1, dtype=np.float64)
    cdef const double[:, ::1] a2 = np.ascontiguousarray(x2, dtype=np.float64)
    cdef const double[:, ::1] b1 = np.ascontiguousarray(y1, dtype=np.float64)
    cdef const double[:, ::1] b2 = np.ascontiguousarray(y2, dtype=np.float64)
    cdef Py_ssize_t n = a1.shape[0], d = a1.shape[1]
    cdef double[::1] best = np.zeros(n)
    cdef Py_ssize_t i, j, p, q
    cdef double s, t, cand, top
    with nogil:
        for j in range(1, n):
            top = 0.0
            for i in range(j):
                s = 0.0
                for p in range(d):
                    for q in range(d):
                        t = (a2[j, p * d + q] - a2[i, p * d + q] - a1[i, p] * (a1[j, q] - a1[i, q])) \
                            - (b2[j, p * d + q] - b2[i, p * d + q] - b1[i, p] * (b1[j, q] - b1[i, q]))
                        s += t * t
                cand = best[i] + _powr(sqrt(s), power)
                if cand > top:
                    top = cand
            best[j] = top
    return best[n - 1] if n > 0 else 0.0
