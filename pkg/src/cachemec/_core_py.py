"""Pure-numpy fallback for the solver hot kernels (see kernels.py).

Variable bounds (0 <= x, x <= ub where finite) are handled analytically
as diagonal barrier terms; the CSR/dense matrix carries only the
structural constraint rows.
"""

from __future__ import annotations

import numpy as np

IMPL_NAME = "python"

_LN2 = float(np.log(2.0))

KIND_ZERO = 0
KIND_CUBIC = 1
KIND_EXP = 2


def obj_eval(kinds, c1, c2, x):
    grad = np.zeros_like(x)
    hdiag = np.zeros_like(x)
    value = 0.0

    cub = kinds == KIND_CUBIC
    if np.any(cub):
        xc, cc = x[cub], c1[cub]
        value += float(np.sum(cc * xc**3))
        grad[cub] = 3.0 * cc * xc**2
        hdiag[cub] = 6.0 * cc * xc

    ex = kinds == KIND_EXP
    if np.any(ex):
        xe, ce, be = x[ex], c1[ex], c2[ex]
        e = np.exp2(xe / be)
        value += float(np.sum(ce * (e - 1.0)))
        grad[ex] = ce * _LN2 / be * e
        hdiag[ex] = ce * (_LN2 / be) ** 2 * e

    return value, grad, hdiag


def obj_value(kinds, c1, c2, x):
    value = 0.0
    cub = kinds == KIND_CUBIC
    if np.any(cub):
        value += float(np.sum(c1[cub] * x[cub] ** 3))
    ex = kinds == KIND_EXP
    if np.any(ex):
        value += float(np.sum(c1[ex] * (np.exp2(x[ex] / c2[ex]) - 1.0)))
    return value


def slacks(data, indices, indptr, dense, h, x):
    return h - dense @ x


def barrier_value(s):
    if s.size == 0:
        return 0.0
    if float(np.min(s)) <= 0.0:
        return np.inf
    return -float(np.sum(np.log(s)))


def box_value(x, ub):
    """-sum log(x) - sum log(ub - x) over finite ub; +inf if violated."""
    if x.size == 0:
        return 0.0
    if float(np.min(x)) <= 0.0:
        return np.inf
    value = -float(np.sum(np.log(x)))
    fin = np.isfinite(ub)
    if np.any(fin):
        d = ub[fin] - x[fin]
        if float(np.min(d)) <= 0.0:
            return np.inf
        value -= float(np.sum(np.log(d)))
    return value


def box_grad_hess(x, ub, grad, hdiag):
    """Add box-barrier gradient/Hessian-diagonal contributions in place."""
    grad -= 1.0 / x
    hdiag += 1.0 / (x * x)
    fin = np.isfinite(ub)
    if np.any(fin):
        d = ub[fin] - x[fin]
        grad[fin] += 1.0 / d
        hdiag[fin] += 1.0 / (d * d)


def barrier_grad(data, indices, indptr, dense, s):
    return dense.T @ (1.0 / s)


def barrier_hess(data, indices, indptr, dense, s):
    w = 1.0 / (s * s)
    return (dense.T * w) @ dense


def merit(data, indices, indptr, dense, h, kinds, c1, c2, x, t, ub):
    # normalized centering merit f + phi/t: its float resolution does not
    # collapse as t grows, unlike t*f + phi
    phi = box_value(x, ub)
    if not np.isfinite(phi):
        return np.inf
    s = h - dense @ x
    phi_s = barrier_value(s)
    if not np.isfinite(phi_s):
        return np.inf
    return obj_value(kinds, c1, c2, x) + (phi + phi_s) / t


def max_step(s, gdx, x, dx, ub):
    """Largest step keeping all structural and box slacks positive."""
    step = np.inf
    pos = gdx > 0
    if np.any(pos):
        step = float(np.min(s[pos] / gdx[pos]))
    neg = dx < 0
    if np.any(neg):
        step = min(step, float(np.min(x[neg] / -dx[neg])))
    fin = np.isfinite(ub) & (dx > 0)
    if np.any(fin):
        step = min(step, float(np.min((ub[fin] - x[fin]) / dx[fin])))
    return step
