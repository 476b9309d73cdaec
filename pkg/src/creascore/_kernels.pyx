# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused C implementations of the hot kernels.

Mirrors creascore._kernels_py; see that module for the contract. The fused
loops avoid the m x m temporaries the numpy fallback allocates and fill the
symmetric similarity matrix from one triangle.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

KIND_LINEAR = 0
KIND_EXPONENTIAL = 1


def pairwise_numeric(values, int kind):
    if kind not in (0, 1):
        raise ValueError(f"unknown numeric kernel code {kind}")
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t m = v.shape[0]
    out = np.empty((m, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double d, s
    for i in range(m):
        o[i, i] = 1.0
        for j in range(i + 1, m):
            d = fabs(v[i] - v[j])
            if kind == 0:
                s = 1.0 / (1.0 + d)
            else:
                s = exp(-d)
            o[i, j] = s
            o[j, i] = s
    return out


def graph_edges(sim, times, double tau):
    cdef double[:, ::1] w = np.ascontiguousarray(sim, dtype=np.float64)
    cdef long long[::1] t = np.ascontiguousarray(times, dtype=np.int64)
    cdef Py_ssize_t m = w.shape[0]
    if w.shape[1] != m or t.shape[0] != m:
        raise ValueError("similarity matrix and time vector sizes disagree")
    prior = np.zeros((m, m), dtype=np.float64)
    subsequent = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] p = prior
    cdef double[:, ::1] q = subsequent
    cdef Py_ssize_t i, j
    cdef double r
    for i in range(m):
        for j in range(m):
            if t[i] < t[j]:
                r = w[i, j] - tau
                if r >= 0.0:
                    q[i, j] = r
                else:
                    p[j, i] = -r
    return prior, subsequent
