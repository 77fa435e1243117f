"""Closed-form energy kernels and the weighted-sum objective.

All kernels take bit counts in SI units and return Joules.  Each kernel
has an analytic gradient twin used by the convex solver and by the
finite-difference checks.  Exponentials are evaluated as ``exp2(d/(tau*B))``
in a single call per entry for accuracy at small exponents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Scenario, Schedule

_LN2 = float(np.log(2.0))


@dataclass
class EnergyBreakdown:
    """Per-term energy totals [J], unweighted."""

    e_mec_p1: float
    e_off_p1: float
    e_mec_p2: float
    e_loc: np.ndarray         # shape (K,)
    e_off: np.ndarray         # shape (K,)

    def weighted_total(self, w0: float, w1: float) -> float:
        return w0 * (self.e_mec_p1 + self.e_mec_p2) + w1 * (
            self.e_off_p1 + float(np.sum(self.e_loc)) + float(np.sum(self.e_off))
        )

    def phase1_weighted(self, w0: float, w1: float) -> float:
        """Weighted energy of the task-caching phase."""
        return w0 * self.e_mec_p1 + w1 * self.e_off_p1

    def phase2_weighted(self, w0: float, w1: float) -> float:
        """Weighted energy of the task arrival/execution phase."""
        return w0 * self.e_mec_p2 + w1 * (
            float(np.sum(self.e_loc)) + float(np.sum(self.e_off))
        )


def _as_nonneg(d, name="d") -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError(f"{name} must be elementwise nonnegative")
    return d


def local_energy(d, zeta: float, C: float, tau: float) -> float:
    """Local-computing energy: sum of zeta * C^3 * d^3 / tau^2 over slots."""
    d = _as_nonneg(d)
    return float(np.sum(zeta * C**3 * d**3 / tau**2))


def local_energy_grad(d, zeta: float, C: float, tau: float) -> np.ndarray:
    d = _as_nonneg(d)
    return 3.0 * zeta * C**3 * d**2 / tau**2


def offload_energy(d, h2, B, tau: float, sigma2: float) -> float:
    """Transmit energy: sum of tau*sigma2*(2^(d/(tau*B)) - 1)/h2 over slots."""
    d = _as_nonneg(d)
    h2 = np.asarray(h2, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.any(h2 <= 0):
        raise ValueError("channel gains h2 must be strictly positive")
    if np.any(B <= 0):
        raise ValueError("bandwidths B must be strictly positive")
    return float(np.sum(tau * sigma2 * (np.exp2(d / (tau * B)) - 1.0) / h2))


def offload_energy_grad(d, h2, B, tau: float, sigma2: float) -> np.ndarray:
    d = _as_nonneg(d)
    h2 = np.asarray(h2, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.any(h2 <= 0):
        raise ValueError("channel gains h2 must be strictly positive")
    if np.any(B <= 0):
        raise ValueError("bandwidths B must be strictly positive")
    return sigma2 * _LN2 / (B * h2) * np.exp2(d / (tau * B))


def mec_energy(d, zeta0: float, C0: float, tau: float) -> float:
    """MEC execution energy: sum of zeta0 * C0^3 * d^3 / tau^2 over slots."""
    d = _as_nonneg(d)
    return float(np.sum(zeta0 * C0**3 * d**3 / tau**2))


def mec_energy_grad(d, zeta0: float, C0: float, tau: float) -> np.ndarray:
    d = _as_nonneg(d)
    return 3.0 * zeta0 * C0**3 * d**2 / tau**2


def mec_cpu_rates(d, C0: float, tau: float) -> np.ndarray:
    """Implied per-slot CPU rates f = C0 * d / tau [cycles/s]."""
    d = _as_nonneg(d)
    return C0 * d / tau


def breakdown(s: Scenario, sched: Schedule) -> EnergyBreakdown:
    p = s.params
    if sched.d_loc.shape != (p.K, p.N) or sched.d_off.shape != (p.K, p.N):
        raise ValueError("schedule dimensions do not match the scenario")
    if sched.d_off_p1.shape != (p.N_p,) or sched.d_mec_p1.shape != (p.N_p,):
        raise ValueError("schedule dimensions do not match the scenario")
    if sched.d_mec.shape != (p.N,):
        raise ValueError("schedule dimensions do not match the scenario")

    e_mec_p1 = mec_energy(sched.d_mec_p1, p.zeta0, p.C0, p.tau)
    # the structurally-zero last slot contributes 2^0 - 1 = 0
    e_off_p1 = offload_energy(
        sched.d_off_p1, s.channels.h2_phase1, p.B_phase1, p.tau, p.sigma2
    )
    e_mec_p2 = mec_energy(sched.d_mec, p.zeta0, p.C0, p.tau)
    e_loc = np.array(
        [local_energy(sched.d_loc[k], p.zeta_k[k], p.C_k[k], p.tau) for k in range(p.K)]
    )
    e_off = np.array(
        [
            offload_energy(sched.d_off[k], s.channels.h2[k], p.B[k], p.tau, p.sigma2)
            for k in range(p.K)
        ]
    )
    return EnergyBreakdown(
        e_mec_p1=e_mec_p1, e_off_p1=e_off_p1, e_mec_p2=e_mec_p2,
        e_loc=e_loc, e_off=e_off,
    )


def objective(s: Scenario, sched: Schedule) -> tuple:
    """Weighted-sum block energy w0*(MEC terms) + w1*(WD terms), with breakdown."""
    bd = breakdown(s, sched)
    return bd.weighted_total(s.params.w0, s.params.w1), bd
