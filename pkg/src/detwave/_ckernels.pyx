# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels; same contracts as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, pow

cnp.import_array()


def cross3(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[1], i
    out = np.empty((3, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            o[0, i] = a[1, i] * b[2, i] - a[2, i] * b[1, i]
            o[1, i] = a[2, i] * b[0, i] - a[0, i] * b[2, i]
            o[2, i] = a[0, i] * b[1, i] - a[1, i] * b[0, i]
    return out


cdef inline double _g(double x) nogil:
    if x <= 0.0:
        return 0.0
    return exp(-1.0 / x)


def chi_profile(t):
    arr = np.asarray(t, dtype=np.float64)
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = np.empty_like(flat)
    cdef double[::1] tv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i, m = flat.shape[0]
    cdef double x, g0, g1
    with nogil:
        for i in range(m):
            x = (tv[i] - 0.75) / 0.25
            if x <= 0.0:
                ov[i] = 1.0
            elif x >= 1.0:
                ov[i] = 0.0
            else:
                g0 = _g(x)
                g1 = _g(1.0 - x)
                ov[i] = 1.0 - g0 / (g0 + g1)
    return out.reshape(arr.shape)


def vec_norm_sum(v, double p):
    cdef double[:, ::1] a = np.ascontiguousarray(v, dtype=np.float64).reshape(3, -1)
    cdef Py_ssize_t i, m = a.shape[1]
    cdef double s = 0.0, mag2, half = 0.5 * p
    with nogil:
        if p == 2.0:
            for i in range(m):
                s += a[0, i] * a[0, i] + a[1, i] * a[1, i] + a[2, i] * a[2, i]
        elif p == 3.0:
            for i in range(m):
                mag2 = a[0, i] * a[0, i] + a[1, i] * a[1, i] + a[2, i] * a[2, i]
                s += mag2 * sqrt(mag2)
        else:
            for i in range(m):
                mag2 = a[0, i] * a[0, i] + a[1, i] * a[1, i] + a[2, i] * a[2, i]
                s += pow(mag2, half)
    return s


def vec_norm_max(v):
    cdef double[:, ::1] a = np.ascontiguousarray(v, dtype=np.float64).reshape(v.shape[0], -1)
    cdef Py_ssize_t i, c, m = a.shape[1], nc = a.shape[0]
    cdef double best = 0.0, mag2
    with nogil:
        for i in range(m):
            mag2 = 0.0
            for c in range(nc):
                mag2 += a[c, i] * a[c, i]
            if mag2 > best:
                best = mag2
    return sqrt(best)
