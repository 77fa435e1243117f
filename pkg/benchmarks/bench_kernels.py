"""Benchmark the compiled solver kernels against the pure-numpy fallback.

Micro-kernels are timed in-process against both implementations; the
end-to-end rows run a full relaxed solve and a small branch-and-bound
search in subprocesses so the import-time kernel selection (CACHEMEC_PURE)
takes effect.

    python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time
import timeit

import numpy as np

from cachemec import _core_py

try:
    from cachemec import _core
except ImportError:
    _core = None

from cachemec import kernels as K


def micro_system(n=170, m=110, nnz=24, seed=0):
    rng = np.random.default_rng(seed)
    kinds = rng.integers(0, 3, n).astype(np.int64)
    c1 = rng.uniform(1e-4, 1e2, n)
    c2 = rng.uniform(10.0, 300.0, n)
    rows = []
    for _ in range(m):
        idx = np.sort(rng.choice(n, size=nnz, replace=False)).astype(np.int64)
        rows.append((idx, rng.uniform(-2, 2, nnz)))
    x = rng.uniform(0.05, 3.0, n)
    h = np.asarray([coef @ x[idx] for idx, coef in rows]) + rng.uniform(0.5, 2, m)
    cm = K.ConstraintMatrix.from_rows(rows, n, h)
    ub = np.where(rng.random(n) < 0.2, x + 1.0, np.inf)
    return kinds, c1, c2, cm, ub, x


def bench_micro():
    kinds, c1, c2, cm, ub, x = micro_system()
    s = cm.h - cm.dense @ x
    cases = {
        "obj_eval": lambda impl: impl.obj_eval(kinds, c1, c2, x),
        "slacks": lambda impl: impl.slacks(cm.data, cm.indices, cm.indptr,
                                           cm.dense, cm.h, x),
        "barrier_grad": lambda impl: impl.barrier_grad(
            cm.data, cm.indices, cm.indptr, cm.dense, s),
        "barrier_hess": lambda impl: impl.barrier_hess(
            cm.data, cm.indices, cm.indptr, cm.dense, s),
        "merit": lambda impl: impl.merit(cm.data, cm.indices, cm.indptr,
                                         cm.dense, cm.h, kinds, c1, c2, x,
                                         1e6, ub),
    }
    print(f"{'kernel':14s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        reps = 2000 if name != "barrier_hess" else 400
        t_py = timeit.timeit(lambda: fn(_core_py), number=reps) / reps
        if _core is None:
            print(f"{name:14s} {t_py*1e6:9.1f}us {'-':>10s} {'-':>8s}")
            continue
        t_cy = timeit.timeit(lambda: fn(_core), number=reps) / reps
        print(f"{name:14s} {t_py*1e6:9.1f}us {t_cy*1e6:9.1f}us "
              f"{t_py/t_cy:7.1f}x")


_END_TO_END = r"""
import time
import cachemec
from cachemec.scenario import GenConfig, gen_scenario
from cachemec.subproblem import assemble, solve
from cachemec.model import CachePlacement
from cachemec.bnb import BnbConfig, solve_bnb

cfg = GenConfig(seed=3, K=6, L=12, N_p=4, N=12, dist_min=15, dist_max=40,
                size_min=2e4, size_max=4e4, dmax=2e5, bandwidth_p1=1e7)
s = gen_scenario(cfg)
inst = assemble(s, CachePlacement.all_free(cfg.L))
solve(inst)  # warm caches
t0 = time.perf_counter()
for _ in range(3):
    solve(assemble(s, CachePlacement.all_free(cfg.L)))
t_solve = (time.perf_counter() - t0) / 3

t0 = time.perf_counter()
rep = solve_bnb(s, BnbConfig(epsilon=1e-6))
t_bnb = time.perf_counter() - t0
print(f"{cachemec.KERNEL_IMPL} {t_solve:.4f} {t_bnb:.4f} {rep.node_count}")
"""


def bench_end_to_end():
    print("\nend-to-end (relaxed solve / BnB at L=12, K=6, N=12):")
    rows = {}
    for env_val, label in (("", "cython"), ("1", "python")):
        env = dict(os.environ)
        if env_val:
            env["CACHEMEC_PURE"] = env_val
        else:
            env.pop("CACHEMEC_PURE", None)
        out = subprocess.run([sys.executable, "-c", _END_TO_END], env=env,
                             capture_output=True, text=True)
        if out.returncode != 0:
            print(f"  {label}: failed: {out.stderr.strip()[:200]}")
            continue
        impl, t_solve, t_bnb, nodes = out.stdout.split()
        rows[impl] = (float(t_solve), float(t_bnb), int(nodes))
        print(f"  {impl:7s} solve {float(t_solve)*1e3:7.1f} ms   "
              f"bnb {float(t_bnb):6.2f} s  ({nodes} nodes)")
    if "cython" in rows and "python" in rows:
        print(f"  speedup  solve {rows['python'][0]/rows['cython'][0]:.2f}x"
              f"   bnb {rows['python'][1]/rows['cython'][1]:.2f}x")


if __name__ == "__main__":
    print(f"compiled core available: {_core is not None} "
          f"(selected: {K.IMPL_NAME})")
    bench_micro()
    bench_end_to_end()
