# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Fused CSC kernel for the damped-operator apply.

Single pass: teleport + dangling base filled first, then the sparse links
accumulated column by column (fixed order, reproducible sums).
"""

import numpy as np


def apply_google_csc(long long[::1] indptr, long long[::1] indices,
                     double[::1] data, long long[::1] dangling_ids,
                     double[::1] v, double alpha, double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s_all = 0.0
    cdef double s_dang = 0.0
    cdef double xj, base_dang, base_tele, axj

    for j in range(n):
        s_all += x[j]
    for k in range(dangling_ids.shape[0]):
        s_dang += x[dangling_ids[k]]

    base_dang = alpha * s_dang / n
    base_tele = (1.0 - alpha) * s_all
    for i in range(n):
        out[i] = base_dang + base_tele * v[i]

    for j in range(n):
        xj = x[j]
        if xj != 0.0:
            axj = alpha * xj
            for k in range(indptr[j], indptr[j + 1]):
                out[indices[k]] += data[k] * axj

    return out_arr
