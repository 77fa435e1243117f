# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver hot kernels (see kernels.py for the contract).

Row loops work on the CSR triplet; the dense matrix argument is accepted
for signature parity with the pure-Python fallback but only its shape is
used.  Semantics match _core_py exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp2, log, HUGE_VAL

cnp.import_array()

IMPL_NAME = "cython"

DEF K_ZERO = 0
DEF K_CUBIC = 1
DEF K_EXP = 2

cdef double LN2 = 0.6931471805599453


def obj_eval(cnp.int64_t[::1] kinds, double[::1] c1, double[::1] c2,
             double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    grad_arr = np.zeros(n)
    hdiag_arr = np.zeros(n)
    cdef double[::1] grad = grad_arr
    cdef double[::1] hdiag = hdiag_arr
    cdef double value = 0.0
    cdef double e, r
    cdef Py_ssize_t i
    for i in range(n):
        if kinds[i] == K_CUBIC:
            value += c1[i] * x[i] * x[i] * x[i]
            grad[i] = 3.0 * c1[i] * x[i] * x[i]
            hdiag[i] = 6.0 * c1[i] * x[i]
        elif kinds[i] == K_EXP:
            e = exp2(x[i] / c2[i])
            r = LN2 / c2[i]
            value += c1[i] * (e - 1.0)
            grad[i] = c1[i] * r * e
            hdiag[i] = c1[i] * r * r * e
    return value, grad_arr, hdiag_arr


def obj_value(cnp.int64_t[::1] kinds, double[::1] c1, double[::1] c2,
              double[::1] x):
    cdef double value = 0.0
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        if kinds[i] == K_CUBIC:
            value += c1[i] * x[i] * x[i] * x[i]
        elif kinds[i] == K_EXP:
            value += c1[i] * (exp2(x[i] / c2[i]) - 1.0)
    return value


def slacks(double[::1] data, cnp.int64_t[::1] indices, cnp.int64_t[::1] indptr,
           dense, double[::1] h, double[::1] x):
    cdef Py_ssize_t m = h.shape[0]
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = h[i]
        for j in range(indptr[i], indptr[i + 1]):
            acc -= data[j] * x[indices[j]]
        out[i] = acc
    return out_arr


def barrier_value(double[::1] s):
    cdef double value = 0.0
    cdef Py_ssize_t i
    for i in range(s.shape[0]):
        if s[i] <= 0.0:
            return HUGE_VAL
        value -= log(s[i])
    return value


def box_value(double[::1] x, double[::1] ub):
    cdef double value = 0.0
    cdef double d
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        if x[i] <= 0.0:
            return HUGE_VAL
        value -= log(x[i])
        if ub[i] != HUGE_VAL:
            d = ub[i] - x[i]
            if d <= 0.0:
                return HUGE_VAL
            value -= log(d)
    return value


def box_grad_hess(double[::1] x, double[::1] ub, double[::1] grad,
                  double[::1] hdiag):
    cdef double d
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        grad[i] -= 1.0 / x[i]
        hdiag[i] += 1.0 / (x[i] * x[i])
        if ub[i] != HUGE_VAL:
            d = ub[i] - x[i]
            grad[i] += 1.0 / d
            hdiag[i] += 1.0 / (d * d)


def barrier_grad(double[::1] data, cnp.int64_t[::1] indices,
                 cnp.int64_t[::1] indptr, dense, double[::1] s):
    cdef Py_ssize_t n = dense.shape[1]
    cdef Py_ssize_t m = s.shape[0]
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double w
    for i in range(m):
        w = 1.0 / s[i]
        for j in range(indptr[i], indptr[i + 1]):
            out[indices[j]] += data[j] * w
    return out_arr


def barrier_hess(double[::1] data, cnp.int64_t[::1] indices,
                 cnp.int64_t[::1] indptr, dense, double[::1] s):
    cdef Py_ssize_t n = dense.shape[1]
    cdef Py_ssize_t m = s.shape[0]
    H_arr = np.zeros((n, n))
    cdef double[:, ::1] H = H_arr
    cdef Py_ssize_t i, j, l, jj, ll
    cdef double w, vj
    for i in range(m):
        w = 1.0 / (s[i] * s[i])
        for j in range(indptr[i], indptr[i + 1]):
            vj = data[j] * w
            jj = indices[j]
            # CSR columns are sorted: fill the upper triangle only
            for l in range(j, indptr[i + 1]):
                H[jj, indices[l]] += vj * data[l]
    for j in range(n):
        for l in range(j + 1, n):
            H[l, j] = H[j, l]
    return H_arr


def merit(double[::1] data, cnp.int64_t[::1] indices, cnp.int64_t[::1] indptr,
          dense, double[::1] h, cnp.int64_t[::1] kinds, double[::1] c1,
          double[::1] c2, double[::1] x, double t, double[::1] ub):
    # normalized centering merit f + phi/t: its float resolution does not
    # collapse as t grows, unlike t*f + phi
    cdef double phi = 0.0
    cdef double d, acc
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        if x[i] <= 0.0:
            return HUGE_VAL
        phi -= log(x[i])
        if ub[i] != HUGE_VAL:
            d = ub[i] - x[i]
            if d <= 0.0:
                return HUGE_VAL
            phi -= log(d)
    for i in range(h.shape[0]):
        acc = h[i]
        for j in range(indptr[i], indptr[i + 1]):
            acc -= data[j] * x[indices[j]]
        if acc <= 0.0:
            return HUGE_VAL
        phi -= log(acc)
    return obj_value(kinds, c1, c2, x) + phi / t


def max_step(double[::1] s, double[::1] gdx, double[::1] x, double[::1] dx,
             double[::1] ub):
    cdef double step = HUGE_VAL
    cdef double cand
    cdef Py_ssize_t i
    for i in range(s.shape[0]):
        if gdx[i] > 0.0:
            cand = s[i] / gdx[i]
            if cand < step:
                step = cand
    for i in range(x.shape[0]):
        if dx[i] < 0.0:
            cand = x[i] / (-dx[i])
            if cand < step:
                step = cand
        elif dx[i] > 0.0 and ub[i] != HUGE_VAL:
            cand = (ub[i] - x[i]) / dx[i]
            if cand < step:
                step = cand
    return step
