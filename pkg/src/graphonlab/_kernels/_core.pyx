# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise r_W kernels (L1 distances between kernel rows)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_l1(double[:, ::1] kernel, double[::1] weights, rows_a, rows_b):
    cdef long[::1] ia = np.ascontiguousarray(rows_a, dtype=np.int64)
    cdef long[::1] ib = np.ascontiguousarray(rows_b, dtype=np.int64)
    cdef Py_ssize_t na = ia.shape[0], nb = ib.shape[0], n = kernel.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((na, nb))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t a, b, k
    cdef double acc
    cdef double[::1] row
    for a in range(na):
        row = kernel[ia[a]]
        for b in range(nb):
            acc = 0.0
            for k in range(n):
                acc += weights[k] * abs(row[k] - kernel[ib[b], k])
            o[a, b] = acc
    return out


def twin_pairs(double[:, ::1] kernel, double[::1] weights, double eps):
    """All pairs i < j with r_W(i, j) < eps; inner loop aborts once eps is exceeded."""
    cdef Py_ssize_t n = kernel.shape[0], m = kernel.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    found = []
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(m):
                acc += weights[k] * abs(kernel[i, k] - kernel[j, k])
                if acc >= eps:
                    break
            if acc < eps:
                found.append((i, j, acc))
    return found


def min_pair_distance(double[:, ::1] kernel, double[::1] weights):
    cdef Py_ssize_t n = kernel.shape[0], m = kernel.shape[1]
    cdef Py_ssize_t i, j, k, bi = -1, bj = -1
    cdef double acc, best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(m):
                acc += weights[k] * abs(kernel[i, k] - kernel[j, k])
                if acc >= best:
                    break
            if acc < best:
                best = acc
                bi = i
                bj = j
    return best, bi, bj
