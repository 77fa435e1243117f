"""Feasible-start barrier method for smooth separable convex programs.

Solves   minimize  f(x)   subject to  A x = b,  G x <= h,  0 <= x (<= ub)

where f is separable (cubic and exponential terms, see kernels.py).
Equality constraints are eliminated exactly: Newton steps are computed
in an orthonormal basis of null(A), so every iterate stays on the
equality manifold to machine precision.  Inequalities enter through the
standard log barrier with a geometric schedule (factor `mu` per
centering), a backtracking line search on the normalized merit
f + barrier/t, and self-concordant damped steps where float cancellation
makes the merit test meaningless.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import kernels as K


@dataclass
class BarrierResult:
    x: np.ndarray
    t: float
    gap: float                # m/t certificate of the final centering
    newton_iters: int
    centerings: int
    converged: bool           # stop_fn accepted (or gap floor reached)
    stalled: bool             # line search / decrement stalled early


def _reduced_direction(H: np.ndarray, F: Optional[np.ndarray],
                       grad: np.ndarray):
    """Newton step restricted to the null space of the equalities.

    Returns (dx, lam2) where lam2 is the squared Newton decrement.
    """
    if F is not None:
        Hz = F.T @ H @ F
        gz = F.T @ grad
    else:
        Hz, gz = H, grad
    base = float(np.max(np.diag(Hz))) if Hz.size else 1.0
    for ridge in (0.0, 1e-14, 1e-10, 1e-6):
        Hr = Hz if ridge == 0.0 else Hz + np.eye(Hz.shape[0]) * (ridge * base)
        try:
            c = scipy.linalg.cho_factor(Hr, check_finite=False)
            dz = -scipy.linalg.cho_solve(c, gz, check_finite=False)
            break
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
            continue
    else:
        dz = -np.linalg.lstsq(Hz, gz, rcond=None)[0]
    lam2 = float(-gz @ dz)
    dx = F @ dz if F is not None else dz
    return dx, lam2


def _center(kinds, c1, c2, F, cm, ub, x, t, ntol, max_newton):
    """Newton iterations for the centering problem at barrier parameter t."""
    iters = 0
    stalled = False
    forced = 0
    diag = np.diag_indices(x.size)
    for _ in range(max_newton):
        f, gf, hd = K.obj_eval(kinds, c1, c2, x)
        s = K.slacks(cm, x)
        grad = t * gf + K.barrier_grad(cm, s)
        hdiag = t * hd
        K.box_grad_hess(x, ub, grad, hdiag)
        H = K.barrier_hess(cm, s)
        H[diag] += hdiag
        dx, lam2 = _reduced_direction(H, F, grad)
        if not np.isfinite(lam2) or lam2 <= 2.0 * ntol:
            break
        # fraction-to-boundary cap keeps all slacks strictly positive
        gdx = cm.dense @ dx
        cap = 0.99 * K.max_step(s, gdx, x, dx, ub)
        step = min(1.0, cap)
        if lam2 <= 0.1:
            # quadratic phase: the damped-Newton decrease is guaranteed and
            # an Armijo test could not resolve the ~lam2/2 progress anyway
            x = x + step * dx
            iters += 1
            continue
        m0 = f + (K.barrier_value(s) + K.box_value(x, ub)) / t
        slope = float(grad @ dx) / t
        accepted = False
        mval = np.inf
        while step > 1e-14:
            mval = K.merit(cm, kinds, c1, c2, x + step * dx, t, ub)
            if mval <= m0 + 0.1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if accepted:
            x = x + step * dx
            iters += 1
            if m0 - mval <= 1e-15 * max(1.0, abs(m0)):
                break  # progress below float resolution: centered enough
        else:
            # merit differences lost to cancellation; take the
            # self-concordant damped step 1/(1+lambda) a few times instead
            forced += 1
            if forced > 5:
                stalled = True
                break
            x = x + min(cap, 1.0 / (1.0 + np.sqrt(lam2))) * dx
            iters += 1
    return x, iters, stalled


def solve_barrier(
    kinds: np.ndarray,
    c1: np.ndarray,
    c2: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    cm: K.ConstraintMatrix,
    ub: np.ndarray,
    x0: np.ndarray,
    *,
    t0: Optional[float] = None,
    mu: float = 10.0,
    ntol: float = 1e-9,
    max_newton: int = 50,
    max_centerings: int = 60,
    t_max: float = 1e16,
    gap_floor: float = 1e-12,
    stop_check_gap: float = 1e-4,
    stop_fn: Optional[Callable[[np.ndarray, float], bool]] = None,
) -> BarrierResult:
    """Path following from a strictly feasible x0 with A x0 = b.

    `stop_fn(x, gap)` is consulted after each centering once the barrier
    certificate m/t drops below `stop_check_gap`; returning True ends the
    run (used to stop exactly when an external KKT check is satisfied).
    """
    x = np.asarray(x0, dtype=float).copy()
    if A.size:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            F = scipy.linalg.null_space(A)
        if F.shape[1] == 0:
            # equalities pin the point completely; nothing to optimize
            return BarrierResult(x=x, t=np.inf, gap=0.0, newton_iters=0,
                                 centerings=0, converged=True, stalled=False)
    else:
        F = None
    # every variable carries a lower-bound barrier; finite ubs add one more
    m_i = cm.m + x.size + int(np.sum(np.isfinite(ub)))

    if t0 is None:
        # aim the first centering at a duality gap near the objective scale
        f0 = abs(K.obj_value(kinds, c1, c2, x))
        t0 = min(max(m_i / max(f0, 1e-2), 1.0), 1e6)
    t = float(t0)
    total = 0
    converged = False
    stalled_any = False
    centerings = 0
    for _ in range(max_centerings):
        x, iters, stalled = _center(kinds, c1, c2, F, cm, ub, x, t, ntol,
                                    max_newton)
        total += iters
        centerings += 1
        stalled_any = stalled_any or stalled
        gap = m_i / t
        if stop_fn is not None and gap <= stop_check_gap and stop_fn(x, gap):
            converged = True
            break
        if stop_fn is None and gap <= gap_floor:
            converged = True
            break
        if t >= t_max:
            break
        t *= mu
    return BarrierResult(x=x, t=t, gap=m_i / t, newton_iters=total,
                         centerings=centerings, converged=converged,
                         stalled=stalled_any)
