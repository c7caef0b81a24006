# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for code computation and brute-force consistency search.

Every routine here has a twin in ``_kernels_py`` that performs the same IEEE
operations in the same order, so both backends return identical codes.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()


cdef inline cnp.int64_t _symbol(double s, double delta, double levels) noexcept nogil:
    cdef double v = ceil(s / delta)
    return <cnp.int64_t>(v - levels * floor(v / levels))


def codes(const double[:, ::1] points, const double[:, ::1] phi,
          const double[::1] dither, const double[::1] delta, int bits):
    """Quantized codes of every row of ``points``; shape (n, M), int64."""
    cdef Py_ssize_t n = points.shape[0], K = points.shape[1], M = phi.shape[0]
    cdef Py_ssize_t i, m, k
    cdef double s, levels = <double>(1 << bits)
    out = np.empty((n, M), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    with nogil:
        for i in range(n):
            for m in range(M):
                s = phi[m, 0] * points[i, 0]
                for k in range(1, K):
                    s = s + phi[m, k] * points[i, k]
                o[i, m] = _symbol(s + dither[m], delta[m], levels)
    return out


def first_mismatch(const double[:, ::1] points, const double[:, ::1] phi,
                   const double[::1] dither, const double[::1] delta, int bits,
                   const cnp.int64_t[::1] code):
    """Length of the leading run of symbols each point shares with ``code``.

    A point is consistent with the first ``m`` measurements iff its entry is
    ``>= m``; scanning stops at the first disagreeing symbol.
    """
    cdef Py_ssize_t n = points.shape[0], K = points.shape[1], M = phi.shape[0]
    cdef Py_ssize_t i, m, k
    cdef double s, levels = <double>(1 << bits)
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for i in range(n):
            m = 0
            while m < M:
                s = phi[m, 0] * points[i, 0]
                for k in range(1, K):
                    s = s + phi[m, k] * points[i, k]
                if _symbol(s + dither[m], delta[m], levels) != code[m]:
                    break
                m += 1
            o[i] = m
    return out


def pair_first_mismatch(const double[:, ::1] proj_a, const double[:, ::1] proj_b,
                        const double[:, ::1] dither, const double[::1] delta, int bits):
    """Per-row leading agreement length for two projection matrices.

    Row ``i`` holds one independent ensemble: ``proj_a[i, m]`` and
    ``proj_b[i, m]`` are the undithered projections of the two signals.
    """
    cdef Py_ssize_t n = proj_a.shape[0], M = proj_a.shape[1]
    cdef Py_ssize_t i, m
    cdef double levels = <double>(1 << bits)
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for i in range(n):
            m = 0
            while m < M:
                if (_symbol(proj_a[i, m] + dither[i, m], delta[m], levels)
                        != _symbol(proj_b[i, m] + dither[i, m], delta[m], levels)):
                    break
                m += 1
            o[i] = m
    return out
