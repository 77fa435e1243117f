import numpy as np
import pytest

from cachemec import energy
from cachemec.model import ArrivalSequences, CachePlacement, ChannelSet, Scenario
from cachemec.scenario import gen_scenario
from cachemec.subproblem import (
    SolveStatus,
    assemble,
    dump_instance,
    kkt_residual,
    solve,
)

from conftest import enumerate_optimum, make_scenario, profitable_gen


def grid_oracle_scenario():
    """K=1, N=3, L=1, D=2000 bits, flat channel, no caching."""
    return make_scenario(
        K=1, L=1, N_p=2, N=3, h2=1e-10, B=2e6, sigma2=1e-8,
        zeta=1e-28, C=3e3, zeta0=1e-29, C0=1e3, tau=0.1,
        w0=0.1, w1=0.9, D=(2000.0,), Dmax=0.0,
    )


# Frozen output of the 10-bit brute-force grid oracle over
# (d_loc[1..3], d_off[1..2]) for grid_oracle_scenario(); see
# test_grid_oracle_rederivation for the oracle itself.
GRID_ORACLE_VALUE = 2.1603234599999997e-07


def run_grid_oracle(step=10.0):
    """Exhaustive search over the schedule simplex at a given bit step.

    All task bits arrive at slot 1, so causality never binds and the
    feasible set is l1+l2+l3+o1+o2 = 2000, all nonnegative.  The MEC
    schedule is completed optimally in closed form: d2+d3 = o1+o2 with
    d2 <= o1 gives d2 = min((o1+o2)/2, o1).
    """
    tau, B, sig2, h2 = 0.1, 2e6, 1e-8, 1e-10
    zeta, C, zeta0, C0 = 1e-28, 3e3, 1e-29, 1e3
    w0, w1, D = 0.1, 0.9, 2000.0

    def value(l1, l2, l3, o1, o2):
        e_loc = zeta * C**3 * (l1**3 + l2**3 + l3**3) / tau**2
        e_off = tau * sig2 * (
            np.exp2(o1 / (tau * B)) + np.exp2(o2 / (tau * B)) - 2.0
        ) / h2
        total = o1 + o2
        d2 = np.minimum(total / 2.0, o1)
        d3 = total - d2
        e_mec = zeta0 * C0**3 * (d2**3 + d3**3) / tau**2
        return w0 * e_mec + w1 * (e_loc + e_off)

    best = np.inf
    for l1 in np.arange(0.0, D + step / 2, step):
        for l2 in np.arange(0.0, D - l1 + step / 2, step):
            rem = D - l1 - l2
            o1 = np.arange(0.0, rem + step / 2, step)[:, None]
            o2 = np.arange(0.0, rem + step / 2, step)[None, :]
            l3 = rem - o1 - o2
            ok = l3 >= -1e-9
            vals = np.where(
                ok, value(l1, l2, np.where(ok, l3, 0.0), o1, o2), np.inf
            )
            best = min(best, float(vals.min()))
    return best


class TestAssemble:
    def test_structural_row_count(self):
        # K=2, N=4, N_p=2, L=3 all FREE:
        # 1 cap + 1 p1-total + 2 p1-causality + 1 p1-done
        # + 8 causality + 2 deadlines + 3 mec-causality + 1 mec-done = 19
        s = make_scenario(K=2, L=3, N_p=2, N=4, D=(1e3, 2e3, 3e3), Dmax=4e3,
                          arrivals=np.array([[1, 2, 3, 1], [2, 2, 1, 3]]))
        inst = assemble(s, CachePlacement.all_free(3))
        assert len(inst.rows) == 19
        tags = [r.tag[0] for r in inst.rows]
        assert tags.count("caus") == 8
        assert tags.count("deadline") == 2
        assert tags.count("mec_caus") == 3

    def test_empty_cache_forces_phase1_to_zero(self):
        s = make_scenario(K=1, L=2, N_p=3, N=4, D=(1e3, 2e3), Dmax=5e3,
                          arrivals=np.array([[1, 2, 1, 2]]))
        sol = solve(assemble(s, CachePlacement.all_fixed(2, 0)))
        assert sol.status is SolveStatus.OPTIMAL
        np.testing.assert_array_equal(sol.schedule.d_off_p1, 0.0)
        np.testing.assert_array_equal(sol.schedule.d_mec_p1, 0.0)

    def test_capacity_overflow_is_structural(self):
        s = make_scenario(K=1, L=2, D=(3e3, 4e3), Dmax=5e3,
                          arrivals=np.array([[1, 2, 1]]))
        inst = assemble(s, CachePlacement.all_fixed(2, 1))
        assert inst.infeasible
        assert ("cap",) in inst.infeasible_rows
        sol = solve(inst)
        assert sol.status is SolveStatus.INFEASIBLE
        assert "capacity" in sol.infeasible_certificate

    def test_free_alphas_get_box_bounds(self):
        s = make_scenario(K=1, L=2, D=(1e3, 2e3), Dmax=2.5e3,
                          arrivals=np.array([[1, 2, 2]]))
        inst = assemble(s, CachePlacement(alpha=(None, 0)))
        assert ("alpha", 1) in inst.var_pos
        assert ("alpha", 2) not in inst.var_pos

    def test_pinning_excludes_variable_class(self):
        s = make_scenario(K=1, L=1, arrivals=np.ones((1, 3), dtype=int))
        names = [n[0] for n in assemble(s, CachePlacement.all_fixed(1, 0),
                                        pin_local=True).var_names]
        assert "dloc" not in names
        names = [n[0] for n in assemble(s, CachePlacement.all_fixed(1, 0),
                                        pin_offload=True).var_names]
        assert "doff2" not in names
        with pytest.raises(ValueError):
            assemble(s, CachePlacement.all_fixed(1, 0),
                     pin_local=True, pin_offload=True)


class TestSolve:
    def test_all_cached_phase2_idle(self):
        # everything arrived is cached: Phase-II loads are all zero and the
        # objective is exactly the Phase-I energy of uploading/executing
        s = make_scenario(K=2, L=2, N_p=3, N=5, D=(1e3, 2e3), Dmax=4e3,
                          h2=1e-8, arrivals=np.ones((2, 5), dtype=int) * 2)
        sol = solve(assemble(s, CachePlacement.all_fixed(2, 1)))
        assert sol.status is SolveStatus.OPTIMAL
        np.testing.assert_allclose(sol.schedule.d_loc, 0.0, atol=1e-9)
        np.testing.assert_allclose(sol.schedule.d_off, 0.0, atol=1e-9)
        np.testing.assert_allclose(sol.schedule.d_mec, 0.0, atol=1e-9)
        _, bd = energy.objective(s, sol.schedule)
        assert sol.objective == pytest.approx(
            0.1 * bd.e_mec_p1 + 0.9 * bd.e_off_p1, rel=1e-9
        )
        assert bd.e_off_p1 > 0

    def test_matches_grid_oracle(self):
        sol = solve(assemble(grid_oracle_scenario(), CachePlacement.all_fixed(1, 0)))
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(GRID_ORACLE_VALUE, rel=1e-3)

    @pytest.mark.slow
    def test_grid_oracle_rederivation(self):
        assert run_grid_oracle() == pytest.approx(GRID_ORACLE_VALUE, rel=1e-12)

    def test_relaxation_dominates_integral_fixings(self, rng):
        s = gen_scenario(profitable_gen(seed=11))
        relaxed = solve(assemble(s, CachePlacement.all_free(s.params.L)))
        for _ in range(6):
            bits = tuple(int(b) for b in rng.integers(0, 2, s.params.L))
            pl = CachePlacement(alpha=bits)
            inst = assemble(s, pl)
            if inst.infeasible:
                continue
            fixed = solve(inst)
            assert relaxed.objective <= fixed.objective + 1e-9

    def test_feasible_whenever_capacity_holds(self, rng):
        # the all-local schedule always exists for unpinned instances
        for seed in range(8):
            s = gen_scenario(profitable_gen(seed=seed))
            D = s.library.D
            while True:
                bits = tuple(int(b) for b in rng.integers(0, 2, s.params.L))
                if sum(D[i] for i, b in enumerate(bits) if b) <= s.library.Dmax:
                    break
            sol = solve(assemble(s, CachePlacement(alpha=bits)))
            assert sol.status is not SolveStatus.INFEASIBLE

    def test_objective_convex_on_schedule_space(self, rng):
        # random feasible schedules via convex combinations of solver output
        s = gen_scenario(profitable_gen(seed=4))
        inst = assemble(s, CachePlacement.all_free(s.params.L))
        sol = solve(inst)
        x = sol.x
        sc = inst.obj_kind  # noqa: F841  (instance exercised above)
        for _ in range(20):
            y = x * rng.uniform(0.0, 2.0, x.size)
            lam = rng.uniform()
            fx = _objective_of_point(inst, x)
            fy = _objective_of_point(inst, y)
            fm = _objective_of_point(inst, lam * x + (1 - lam) * y)
            assert fm <= lam * fx + (1 - lam) * fy + 1e-12


def _objective_of_point(inst, x):
    from cachemec.subproblem import schedule_from_point
    val, _ = energy.objective(inst.scenario, schedule_from_point(inst, x))
    return val


class TestKktResidual:
    def test_zero_arrival_exact_point_is_exact(self):
        # every arrived task is cached, so all Phase-II loads are zero; with
        # N_p=2 the Phase-I schedule is forced by the equalities (one offload
        # slot, one execution slot), making the optimum known exactly
        s = make_scenario(K=1, L=1, N_p=2, N=3, D=(1e3,), Dmax=2e3,
                          arrivals=np.ones((1, 3), dtype=int))
        inst = assemble(s, CachePlacement.all_fixed(1, 1))
        x = np.zeros(inst.n_vars)
        x[inst.var_pos[("doff1", 1)]] = 1e3
        x[inst.var_pos[("dmec1", 2)]] = 1e3
        res = kkt_residual(inst, x)
        assert res == pytest.approx(0.0, abs=1e-12)

    def test_uncachable_idle_point_is_exact(self):
        # nothing can be cached (Dmax=0) and the only arrived task is served
        # fully locally at the unique even split: perturbations of that split
        # are what the solver must reproduce; here check the zero-Phase-I
        # point with the known optimal local schedule certifies exactly
        s = make_scenario(K=1, L=1, N_p=2, N=3, D=(2.1e3,), Dmax=0.0,
                          arrivals=np.ones((1, 3), dtype=int))
        inst = assemble(s, CachePlacement.all_fixed(1, 0))
        x = np.zeros(inst.n_vars)
        for n in (1, 2, 3):
            x[inst.var_pos[("dloc", 1, n)]] = 700.0
        # local marginal is equalized across slots and offloading marginals
        # exceed it at zero, so bound multipliers absorb them: exact KKT
        res = kkt_residual(inst, x)
        assert res <= 1e-9

    def test_solver_points_certify(self):
        for seed in range(5):
            s = gen_scenario(profitable_gen(seed=seed))
            inst = assemble(s, CachePlacement.all_free(s.params.L))
            sol = solve(inst)
            assert sol.status is SolveStatus.OPTIMAL
            recomputed = kkt_residual(inst, sol.x)
            assert recomputed <= 1e-6
            assert recomputed == pytest.approx(sol.kkt_residual, abs=1e-9)

    def test_perturbation_breaks_certificate(self):
        s = gen_scenario(profitable_gen(seed=3))
        inst = assemble(s, CachePlacement.all_free(s.params.L))
        sol = solve(inst)
        x = sol.x.copy()
        free_pos = [i for i, n in enumerate(inst.var_names) if n[0] == "dloc"]
        x[free_pos[0]] += 100.0
        assert kkt_residual(inst, x) > 1e-6

    def test_dimension_mismatch(self):
        s = make_scenario()
        inst = assemble(s, CachePlacement.all_fixed(1, 0))
        with pytest.raises(ValueError):
            kkt_residual(inst, np.zeros(inst.n_vars + 1))


class TestInvariance:
    def test_wd_permutation(self):
        cfg = profitable_gen(seed=6, K=4)
        s = gen_scenario(cfg)
        perm = [2, 0, 3, 1]
        p = s.params
        from cachemec.model import SystemParams

        params2 = SystemParams(
            K=p.K, L=p.L, N_p=p.N_p, N=p.N, tau=p.tau, w0=p.w0, w1=p.w1,
            sigma2=p.sigma2, zeta0=p.zeta0, C0=p.C0,
            zeta_k=p.zeta_k[perm], C_k=p.C_k[perm],
            B_phase1=p.B_phase1, B=p.B[perm],
        )
        s2 = Scenario(
            params=params2,
            library=s.library,
            channels=ChannelSet(h2_phase1=s.channels.h2_phase1,
                                h2=s.channels.h2[perm]),
            arrivals=ArrivalSequences(s=s.arrivals.s[perm]),
            k_o=perm.index(s.k_o - 1) + 1,
        )
        pl = CachePlacement.all_free(s.params.L)
        a = solve(assemble(s, pl))
        b = solve(assemble(s2, pl))
        assert a.objective == pytest.approx(b.objective, rel=1e-9)
        np.testing.assert_allclose(
            a.schedule.d_loc[perm], b.schedule.d_loc, atol=1.0
        )

    def test_capacity_monotonicity(self):
        from dataclasses import replace
        cfg = profitable_gen(seed=8)
        values = []
        for dmax in (0.0, 2e4, 4e4, 8e4, 1.6e5):
            s = gen_scenario(replace(cfg, dmax=dmax))
            sol = solve(assemble(s, CachePlacement.all_free(s.params.L)))
            values.append(sol.objective)
        for lo, hi in zip(values[1:], values[:-1]):
            assert lo <= hi + 1e-9


class TestDump:
    def test_dump_lists_rows_and_vars(self):
        s = make_scenario(K=1, L=1, D=(2e3,), Dmax=3e3,
                          arrivals=np.ones((1, 3), dtype=int))
        inst = assemble(s, CachePlacement.all_free(1))
        text = dump_instance(inst)
        assert "variables:" in text and "constraints:" in text
        assert "('cap',)" in text
        assert text.count("x0") >= 1


class TestEnumerationSanity:
    def test_small_instance_solver_vs_enumeration(self):
        s = gen_scenario(profitable_gen(seed=12, L=3))
        best, best_pl, table = enumerate_optimum(s)
        assert best < np.inf
        # relaxed root is a lower bound on the enumerated optimum
        relaxed = solve(assemble(s, CachePlacement.all_free(3)))
        assert relaxed.certified_lower <= best + 1e-9
