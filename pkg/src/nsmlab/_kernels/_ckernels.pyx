# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_pykernels`` for the reference versions."""
import numpy as np

from libc.math cimport exp, expm1
from libc.stdint cimport uint64_t

cdef double _TWO_M53 = 1.0 / 9007199254740992.0


def xorshift_uniform(uint64_t state, double[::1] out):
    """Fill ``out`` with uniforms in [0, 1); return the advanced state."""
    cdef Py_ssize_t i, n = out.shape[0]
    cdef uint64_t x = state
    for i in range(n):
        x ^= x >> 12
        x ^= x << 25
        x ^= x >> 27
        out[i] = <double>((x * <uint64_t>0x2545F4914F6CDD1DULL) >> 11) * _TWO_M53
    return x


def maximal_scan(const double[::1] g, double h, const double[::1] rhos):
    cdef Py_ssize_t n = g.shape[0], nr = rhos.shape[0], i, r
    cdef double x, ex, a, b, acc, gi, gn
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    for r in range(nr):
        x = rhos[r] * h
        ex = exp(-x)
        a = -expm1(-x)
        if x < 1e-3:
            b = x * (0.5 - x * (1.0 / 3.0 - x * (0.125 - x / 30.0)))
        else:
            b = (a - x * ex) / x
        acc = 0.0
        for i in range(n - 2, -1, -1):
            gi = g[i] if g[i] >= 0 else -g[i]
            gn = g[i + 1] if g[i + 1] >= 0 else -g[i + 1]
            acc = gi * a + (gn - gi) * b + ex * acc
            if acc > o[i]:
                o[i] = acc
    return out


def cross3(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[1], i
    out = np.empty((3, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        o[0, i] = a[1, i] * b[2, i] - a[2, i] * b[1, i]
        o[1, i] = a[2, i] * b[0, i] - a[0, i] * b[2, i]
        o[2, i] = a[0, i] * b[1, i] - a[1, i] * b[0, i]
    return out


def etd_combine(const double[::1] e, const double[::1] p1, const double[::1] p2,
                const double complex[:, ::1] z, const double complex[:, ::1] n0,
                n1):
    """Return ``e*z + p1*n0 + p2*(n1 - n0)`` per mode (``n1`` may be None)."""
    cdef Py_ssize_t nc = z.shape[0], n = z.shape[1], c, i
    out = np.empty((nc, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef const double complex[:, ::1] m
    if n1 is None:
        for c in range(nc):
            for i in range(n):
                o[c, i] = e[i] * z[c, i] + p1[i] * n0[c, i]
    else:
        m = n1
        for c in range(nc):
            for i in range(n):
                o[c, i] = e[i] * z[c, i] + p1[i] * n0[c, i] + p2[i] * (m[c, i] - n0[c, i])
    return out
