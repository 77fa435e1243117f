import os

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import itertools

import numpy as np
import pytest

from cachemec.model import (
    ArrivalSequences,
    CachePlacement,
    ChannelSet,
    Scenario,
    SystemParams,
    TaskLibrary,
)
from cachemec.scenario import GenConfig
from cachemec.subproblem import SolveStatus, assemble, solve


def make_scenario(
    K=1, L=1, N_p=2, N=3, tau=0.1, w0=0.1, w1=0.9, sigma2=1e-8,
    zeta0=1e-29, C0=1e3, zeta=1e-28, C=3e3, B=2e6, h2=1e-10,
    D=(2000.0,), Dmax=0.0, arrivals=None,
):
    """Hand-crafted scenario with flat channels and uniform WD parameters."""
    if arrivals is None:
        arrivals = np.ones((K, N), dtype=np.int64)
    params = SystemParams(
        K=K, L=L, N_p=N_p, N=N, tau=tau, w0=w0, w1=w1, sigma2=sigma2,
        zeta0=zeta0, C0=C0,
        zeta_k=np.full(K, zeta), C_k=np.full(K, C),
        B_phase1=np.full(N_p, B), B=np.full((K, N), B),
    )
    return Scenario(
        params=params,
        library=TaskLibrary(D=np.array(D, dtype=float), Dmax=float(Dmax)),
        channels=ChannelSet(h2_phase1=np.full(N_p, h2), h2=np.full((K, N), h2)),
        arrivals=ArrivalSequences(s=np.asarray(arrivals, dtype=np.int64)),
        k_o=1,
    )


def profitable_gen(seed, **overrides):
    """Generator config in the regime where caching pays off: short AP
    distances and heavy tasks, so offloading/uploading is cheap relative
    to the cubic local-computing cost."""
    kwargs = dict(
        seed=seed, K=3, L=5, N_p=3, N=6,
        dist_min=30.0, dist_max=120.0,
        size_min=8e3, size_max=25e3, dmax=4e4,
    )
    kwargs.update(overrides)
    return GenConfig(**kwargs)


def enumerate_optimum(s, tol=1e-8):
    """Exhaustive oracle: solve every feasible 0/1 placement, return
    (best objective, best placement, per-placement table)."""
    L = s.params.L
    best, best_pl = np.inf, None
    table = {}
    for bits in itertools.product((0, 1), repeat=L):
        pl = CachePlacement(alpha=bits)
        inst = assemble(s, pl)
        if inst.infeasible:
            continue
        sol = solve(inst, tol=tol)
        if sol.status is SolveStatus.INFEASIBLE:
            continue
        table[bits] = sol
        if sol.objective < best:
            best, best_pl = sol.objective, pl
    return best, best_pl, table


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
