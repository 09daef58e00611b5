# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; same signatures as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport erf, erfc, exp, log, sqrt, INFINITY

cnp.import_array()

cdef double _SQRT2 = sqrt(2.0)
cdef double _INV_SQRT2PI = 1.0 / sqrt(2.0 * 3.141592653589793)
cdef double _SIMPSON_WIDTH = 1e-3


cdef inline double _phi(double z) nogil:
    return _INV_SQRT2PI * exp(-0.5 * z * z)


cdef inline double _ndtr_diff(double a, double b) nogil:
    cdef double out
    if b - a < _SIMPSON_WIDTH:
        out = (b - a) / 6.0 * (_phi(a) + 4.0 * _phi(0.5 * (a + b)) + _phi(b))
    elif a > 0:
        out = 0.5 * (erfc(a / _SQRT2) - erfc(b / _SQRT2))
    elif b < 0:
        out = 0.5 * (erfc(-b / _SQRT2) - erfc(-a / _SQRT2))
    else:
        out = 0.5 * (erf(b / _SQRT2) - erf(a / _SQRT2))
    return out if out > 0 else 0.0


def ndtr_diff(a, b):
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    cdef double[::1] av = np.ascontiguousarray(a_arr).ravel()
    cdef double[::1] bv = np.ascontiguousarray(b_arr).ravel()
    out = np.empty(av.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(av.shape[0]):
            ov[i] = _ndtr_diff(av[i], bv[i])
    return out.reshape(a_arr.shape)


def normal_ball_logweights(theta, data, double r, double sd, double lo, double hi):
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=float)
    cdef double[::1] xs = np.ascontiguousarray(data, dtype=float).ravel()
    cdef Py_ssize_t n = th.shape[0], k = xs.shape[0], i, j
    out = np.zeros(n)
    cdef double[::1] ov = out
    cdef double a, b, z, m, t
    for j in range(k):
        if max(xs[j] - r, lo) >= min(xs[j] + r, hi):
            return np.full(n, -np.inf)
    with nogil:
        for i in range(n):
            t = th[i]
            z = log(_ndtr_diff((lo - t) / sd, (hi - t) / sd))
            for j in range(k):
                a = max(xs[j] - r, lo)
                b = min(xs[j] + r, hi)
                m = _ndtr_diff((a - t) / sd, (b - t) / sd)
                if m <= 0:
                    ov[i] = -INFINITY
                    break
                ov[i] += log(m) - z
    return out


def cloud_ball_masses(offsets, locs, weights, x, double r):
    cdef long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    loc_arr = np.asarray(locs, dtype=float)
    if loc_arr.ndim == 1:
        loc_arr = loc_arr[:, None]
    cdef double[:, ::1] L = np.ascontiguousarray(loc_arr)
    cdef double[::1] W = np.ascontiguousarray(weights, dtype=float)
    cdef double[::1] X = np.ascontiguousarray(x, dtype=float).ravel()
    cdef Py_ssize_t n = off.shape[0] - 1, d = L.shape[1], j, k, c
    out = np.zeros(n)
    cdef double[::1] ov = out
    cdef double r2 = r * r, d2, diff, acc
    with nogil:
        for j in range(n):
            acc = 0.0
            for k in range(off[j], off[j + 1]):
                d2 = 0.0
                for c in range(d):
                    diff = L[k, c] - X[c]
                    d2 += diff * diff
                if d2 < r2:
                    acc += W[k]
            ov[j] = acc
    return out


def stick_scan(thetas, double remainder, double eps, Py_ssize_t limit):
    cdef double[::1] th = np.ascontiguousarray(thetas, dtype=float)
    cdef Py_ssize_t cap = min(th.shape[0], max(limit, 0)), used = 0
    weights = np.empty(cap)
    cdef double[::1] wv = weights
    cdef double rem = remainder
    with nogil:
        while used < cap and rem >= eps:
            wv[used] = th[used] * rem
            rem = rem * (1.0 - th[used])
            used += 1
    return weights[:used], rem, used
