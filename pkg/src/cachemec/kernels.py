"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The barrier/Newton solver spends nearly all of its time in four small
operations: separable-objective evaluation, slack computation, log-barrier
gradient/Hessian accumulation and the line-search merit function.  These
are implemented twice with identical semantics:

* ``cachemec._core``     - Cython extension (preferred),
* ``cachemec._core_py``  - numpy fallback.

The implementation is chosen once at import time.  Set ``CACHEMEC_PURE=1``
to force the fallback, e.g. for benchmarking one against the other
(``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

# objective term kinds, shared by both implementations
KIND_ZERO = 0     # no objective contribution (relaxed caching variables)
KIND_CUBIC = 1    # c1 * x^3           (CPU energy)
KIND_EXP = 2      # c1 * (2^(x/c2)-1)  (transmit energy)


@dataclass
class ConstraintMatrix:
    """Inequality system G x <= h kept in CSR and dense form.

    The dense copy feeds the BLAS-based fallback; the CSR triplet feeds
    the compiled row loops.  Sizes here are small (a few hundred rows),
    so holding both is free.
    """

    dense: np.ndarray
    data: np.ndarray
    indices: np.ndarray
    indptr: np.ndarray
    h: np.ndarray

    @classmethod
    def from_rows(cls, rows, n: int, rhs) -> "ConstraintMatrix":
        """rows: iterable of (idx_array, coef_array) pairs."""
        m = len(rows)
        dense = np.zeros((m, n))
        data, indices, indptr = [], [], [0]
        for i, (idx, coef) in enumerate(rows):
            order = np.argsort(idx, kind="stable")
            idx = np.asarray(idx, dtype=np.int64)[order]
            coef = np.asarray(coef, dtype=float)[order]
            dense[i, idx] = coef
            data.extend(coef.tolist())
            indices.extend(idx.tolist())
            indptr.append(len(indices))
        return cls(
            dense=dense,
            data=np.array(data, dtype=float),
            indices=np.array(indices, dtype=np.int64),
            indptr=np.array(indptr, dtype=np.int64),
            h=np.asarray(rhs, dtype=float).copy(),
        )

    @property
    def m(self) -> int:
        return self.h.size

    @property
    def n(self) -> int:
        return self.dense.shape[1]


if os.environ.get("CACHEMEC_PURE", "").strip() not in ("", "0"):
    from . import _core_py as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as impl

IMPL_NAME: str = impl.IMPL_NAME


def obj_eval(kinds, c1, c2, x):
    """Separable objective: value, gradient and Hessian diagonal."""
    return impl.obj_eval(kinds, c1, c2, x)


def obj_value(kinds, c1, c2, x) -> float:
    return impl.obj_value(kinds, c1, c2, x)


def slacks(cm: ConstraintMatrix, x) -> np.ndarray:
    """s = h - G x."""
    return impl.slacks(cm.data, cm.indices, cm.indptr, cm.dense, cm.h, x)


def barrier_value(s) -> float:
    """-sum(log s); +inf when any slack is nonpositive."""
    return impl.barrier_value(s)


def box_value(x, ub) -> float:
    """Barrier of the variable box 0 < x (< ub where finite)."""
    return impl.box_value(x, ub)


def box_grad_hess(x, ub, grad, hdiag) -> None:
    """Accumulate box-barrier gradient and Hessian diagonal in place."""
    impl.box_grad_hess(x, ub, grad, hdiag)


def barrier_grad(cm: ConstraintMatrix, s) -> np.ndarray:
    """gradient of -sum log(h - Gx):  G^T (1/s)."""
    return impl.barrier_grad(cm.data, cm.indices, cm.indptr, cm.dense, s)


def barrier_hess(cm: ConstraintMatrix, s) -> np.ndarray:
    """Hessian of the log barrier:  G^T diag(1/s^2) G, dense."""
    return impl.barrier_hess(cm.data, cm.indices, cm.indptr, cm.dense, s)


def merit(cm: ConstraintMatrix, kinds, c1, c2, x, t: float, ub) -> float:
    """Normalized centering merit f(x) + barrier(x)/t; +inf when infeasible."""
    return impl.merit(
        cm.data, cm.indices, cm.indptr, cm.dense, cm.h, kinds, c1, c2, x, t, ub
    )


def max_step(s, gdx, x, dx, ub) -> float:
    """Largest step along dx keeping every barrier slack positive."""
    return impl.max_step(s, gdx, x, dx, ub)
