"""Assembly and solution of the convex subproblem P(L0, L1).

The subproblem is the block design problem with every caching variable
either fixed to 0/1 or relaxed to [0, 1]: a smooth separable convex
objective (CPU energy cubes, transmit-energy exponentials) under linear
equality/inequality constraints.  ``assemble`` produces the exact
constraint inventory; ``solve`` reduces it (folding variables that the
constants force to zero, dropping rows implied by the equalities),
finds a strictly interior start with an auxiliary max-slack LP and runs
the feasible-start barrier method; ``kkt_residual`` independently
certifies any candidate point on the *unreduced* system.

Internally the solver works in scaled units (Kbits, mJ) to condition
the cubic Hessians; everything at the module boundary is bits/Joules.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from . import energy
from . import kernels as K
from . import newton
from .model import CachePlacement, Scenario, Schedule, first_arrival_slots

KBIT = 1e3      # bits per internal bit unit
E_SCALE = 1e3   # internal energy unit is mJ

_IMPLIED_TOL = 1e-9     # row is implied by equalities if lstsq residual is below
_CONST_TOL = 1e-7       # feasibility slack for constant rows (scaled units)
_NEAR_ACTIVE = 1e-4     # relative slack below which a row gets its own dual


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Row:
    """One linear constraint sum(coef * var) SENSE rhs, in bits."""

    tag: tuple
    sense: str               # "<=" or "=="
    idx: np.ndarray          # positions into the instance variable list
    coef: np.ndarray
    rhs: float


@dataclass
class ConvexInstance:
    scenario: Scenario
    placement: CachePlacement          # effective placement (after forced folds)
    requested_placement: CachePlacement
    pin_local: bool
    pin_offload: bool
    var_names: tuple                   # ("alpha", ell) / ("doff1", i) / ...
    var_pos: dict
    alpha_mask: np.ndarray             # bool per variable
    rows: tuple                        # full constraint inventory
    obj_kind: np.ndarray               # per-variable objective term kinds
    obj_c1: np.ndarray
    obj_c2: np.ndarray
    infeasible: bool = False
    infeasible_reason: Optional[str] = None
    infeasible_rows: tuple = ()
    _scaled: Optional[dict] = field(default=None, repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)


@dataclass
class ConvexSolution:
    status: SolveStatus
    x: np.ndarray                      # variable values in bits (alphas unitless)
    alpha: np.ndarray                  # length-L caching vector incl. relaxed values
    schedule: Schedule
    objective: float                   # [J], recomputed from the schedule
    certified_lower: float             # [J], valid lower bound on the optimum
    kkt_residual: float
    newton_iters: int = 0
    barrier_gap: float = 0.0           # final m/t in scaled units
    infeasible_certificate: Optional[str] = None


def _arrived_rhs_bits(D, placement, cts) -> float:
    """Constant part of the arrived-bits RHS.

    Fixed tasks contribute (1 - alpha) * D; a FREE task contributes its
    full D here while its -D * alpha part stays on the variable side.
    """
    total = 0.0
    for ell in cts:
        a = placement.alpha[ell - 1]
        total += D[ell - 1] if a is None else (1.0 - a) * D[ell - 1]
    return total


def assemble(
    s: Scenario,
    placement: CachePlacement,
    pin_local: bool = False,
    pin_offload: bool = False,
) -> ConvexInstance:
    """Build P(L0, L1) with FREE alphas as box-bounded variables.

    Structural zeros never become variables.  Fixed alphas are folded
    into the constraint constants.  The only infeasibility detectable
    here is a fixed cache exceeding capacity (or a pinned-local instance
    whose last-slot arrival cannot be cached).
    """
    if pin_local and pin_offload:
        raise ValueError("cannot pin both local computing and offloading")
    p = s.params
    D = s.library.D
    if placement.L != p.L:
        raise ValueError(f"placement has {placement.L} entries, expected {p.L}")

    requested = placement
    infeasible_reason = None
    infeasible_rows: tuple = ()

    if pin_local:
        # With no local computing, bits first arriving at slot N can never be
        # served (offloading at slot N is structurally zero), so those tasks
        # must be cached.
        for k in range(1, p.K + 1):
            first = first_arrival_slots(s.arrivals.s[k - 1])
            last_task = int(s.arrivals.s[k - 1][p.N - 1])
            if first[last_task] == p.N:
                a = placement.alpha[last_task - 1]
                if a == 0:
                    infeasible_reason = (
                        f"full-offloading: task {last_task} first arrives at WD {k} "
                        f"in the final slot and is fixed uncached"
                    )
                    infeasible_rows = (("deadline", k), ("caus", k, p.N - 1))
                elif a is None:
                    placement = placement.with_fixed(last_task, 1)

    sum_l1 = placement.cached_bits(D)
    if infeasible_reason is None and sum_l1 > s.library.Dmax:
        infeasible_reason = (
            f"cache capacity exceeded: fixed cached bits {sum_l1} > Dmax "
            f"{s.library.Dmax}"
        )
        infeasible_rows = (("cap",),)

    if infeasible_reason is None:
        # capacity exactly exhausted (or no offload slots in Phase I) forces
        # every remaining FREE alpha to zero
        if placement.free_indices and (
            s.library.Dmax - sum_l1 <= 0.0 or p.N_p == 1
        ):
            placement = placement.with_all_free_fixed(0)
        if p.N_p == 1 and placement.cached_bits(D) > 0.0:
            infeasible_reason = (
                "Phase I has no offload slot (N_p=1) but the placement caches bits"
            )
            infeasible_rows = (("p1_total",),)

    # ---- variables -------------------------------------------------------
    var_names = []
    for ell in placement.free_indices:
        var_names.append(("alpha", ell))
    for i in range(1, p.N_p):
        var_names.append(("doff1", i))
    for i in range(2, p.N_p + 1):
        var_names.append(("dmec1", i))
    if not pin_local:
        for k in range(1, p.K + 1):
            for n in range(1, p.N + 1):
                var_names.append(("dloc", k, n))
    if not pin_offload:
        for k in range(1, p.K + 1):
            for n in range(1, p.N):
                var_names.append(("doff2", k, n))
    for n in range(2, p.N + 1):
        var_names.append(("dmec2", n))
    var_pos = {name: i for i, name in enumerate(var_names)}
    nv = len(var_names)
    alpha_mask = np.array([name[0] == "alpha" for name in var_names], dtype=bool)

    # ---- objective terms -------------------------------------------------
    kind = np.zeros(nv, dtype=np.int64)
    c1 = np.zeros(nv)
    c2 = np.ones(nv)
    for i, name in enumerate(var_names):
        if name[0] == "doff1":
            slot = name[1]
            kind[i] = K.KIND_EXP
            c1[i] = p.w1 * p.tau * p.sigma2 / s.channels.h2_phase1[slot - 1]
            c2[i] = p.tau * p.B_phase1[slot - 1]
        elif name[0] == "dmec1" or name[0] == "dmec2":
            kind[i] = K.KIND_CUBIC
            c1[i] = p.w0 * p.zeta0 * p.C0**3 / p.tau**2
        elif name[0] == "dloc":
            k = name[1]
            kind[i] = K.KIND_CUBIC
            c1[i] = p.w1 * p.zeta_k[k - 1] * p.C_k[k - 1] ** 3 / p.tau**2
        elif name[0] == "doff2":
            k, n = name[1], name[2]
            kind[i] = K.KIND_EXP
            c1[i] = p.w1 * p.tau * p.sigma2 / s.channels.h2[k - 1, n - 1]
            c2[i] = p.tau * p.B[k - 1, n - 1]

    # ---- constraint inventory --------------------------------------------
    def row(tag, sense, pairs, rhs):
        if pairs:
            idx, coef = zip(*pairs)
        else:
            idx, coef = (), ()
        return Row(
            tag=tag, sense=sense,
            idx=np.array(idx, dtype=np.int64),
            coef=np.array(coef, dtype=float),
            rhs=float(rhs),
        )

    free_alpha = [(var_pos[("alpha", ell)], ell) for ell in placement.free_indices]
    sum_l1 = placement.cached_bits(D)
    rows = []

    # cache capacity
    rows.append(row(
        ("cap",), "<=",
        [(pos, D[ell - 1]) for pos, ell in free_alpha],
        s.library.Dmax - sum_l1,
    ))
    # Phase-I offload total equals the cached bits
    pairs = [(var_pos[("doff1", i)], 1.0) for i in range(1, p.N_p)]
    pairs += [(pos, -D[ell - 1]) for pos, ell in free_alpha]
    rows.append(row(("p1_total",), "==", pairs, sum_l1))
    # Phase-I execution causality
    for i in range(1, p.N_p + 1):
        pairs = [(var_pos[("dmec1", j)], 1.0) for j in range(2, i + 1)]
        pairs += [(var_pos[("doff1", j)], -1.0) for j in range(1, i)]
        rows.append(row(("p1_caus", i), "<=", pairs, 0.0))
    # Phase-I completion
    pairs = [(var_pos[("dmec1", j)], 1.0) for j in range(2, p.N_p + 1)]
    pairs += [(var_pos[("doff1", j)], -1.0) for j in range(1, p.N_p)]
    rows.append(row(("p1_done",), "==", pairs, 0.0))

    # Phase-II per-WD causality (all n, the n=N row is implied by the
    # deadline equality and dropped again inside the solver) and deadline
    for k in range(1, p.K + 1):
        first = first_arrival_slots(s.arrivals.s[k - 1])
        load_pairs: list = []
        deadline_pairs = None
        deadline_rhs = 0.0
        for n in range(1, p.N + 1):
            cts = {ell for ell, fn in first.items() if fn <= n}
            if not pin_local:
                load_pairs.append((var_pos[("dloc", k, n)], 1.0))
            if not pin_offload and n <= p.N - 1:
                load_pairs.append((var_pos[("doff2", k, n)], 1.0))
            pairs = list(load_pairs)
            pairs += [
                (pos, D[ell - 1]) for pos, ell in free_alpha if ell in cts
            ]
            rhs = _arrived_rhs_bits(D, placement, cts)
            rows.append(row(("caus", k, n), "<=", pairs, rhs))
            if n == p.N:
                deadline_pairs, deadline_rhs = pairs, rhs
        rows.append(row(("deadline", k), "==", deadline_pairs, deadline_rhs))

    # MEC causality and completion in Phase II
    for n in range(1, p.N):
        pairs = [(var_pos[("dmec2", j)], 1.0) for j in range(2, n + 1)]
        if not pin_offload:
            pairs += [
                (var_pos[("doff2", k, j)], -1.0)
                for j in range(1, n)
                for k in range(1, p.K + 1)
            ]
        rows.append(row(("mec_caus", n), "<=", pairs, 0.0))
    pairs = [(var_pos[("dmec2", j)], 1.0) for j in range(2, p.N + 1)]
    if not pin_offload:
        pairs += [
            (var_pos[("doff2", k, j)], -1.0)
            for j in range(1, p.N)
            for k in range(1, p.K + 1)
        ]
    rows.append(row(("mec_done",), "==", pairs, 0.0))

    return ConvexInstance(
        scenario=s,
        placement=placement,
        requested_placement=requested,
        pin_local=pin_local,
        pin_offload=pin_offload,
        var_names=tuple(var_names),
        var_pos=var_pos,
        alpha_mask=alpha_mask,
        rows=tuple(rows),
        obj_kind=kind,
        obj_c1=c1,
        obj_c2=c2,
        infeasible=infeasible_reason is not None,
        infeasible_reason=infeasible_reason,
        infeasible_rows=infeasible_rows,
    )


# --------------------------------------------------------------------------
# scaled view of the full (unreduced) instance, used by kkt_residual
# --------------------------------------------------------------------------

def _row_scaled_coef(inst: ConvexInstance, r: Row) -> np.ndarray:
    # alpha coefficients carry bits; dividing the row by KBIT turns them into
    # Kbits while the unit coefficients of the (scaled) bit variables survive.
    coef = r.coef.copy()
    if coef.size:
        is_alpha = inst.alpha_mask[r.idx]
        coef[is_alpha] /= KBIT
    return coef


def _scaled_objective(inst: ConvexInstance):
    kind = inst.obj_kind.copy()
    c1 = inst.obj_c1.copy()
    c2 = inst.obj_c2.copy()
    cub = kind == K.KIND_CUBIC
    ex = kind == K.KIND_EXP
    c1[cub] *= E_SCALE * KBIT**3
    c1[ex] *= E_SCALE
    c2[ex] /= KBIT
    return kind, c1, c2


def _scaled_full(inst: ConvexInstance) -> dict:
    if inst._scaled is not None:
        return inst._scaled
    nv = inst.n_vars
    kind, c1, c2 = _scaled_objective(inst)

    eq_rows, eq_rhs, eq_tags = [], [], []
    in_rows, in_rhs, in_tags = [], [], []
    for r in inst.rows:
        coef = _row_scaled_coef(inst, r)
        rhs = r.rhs / KBIT
        if r.sense == "==":
            eq_rows.append((r.idx, coef))
            eq_rhs.append(rhs)
            eq_tags.append(r.tag)
        else:
            in_rows.append((r.idx, coef))
            in_rhs.append(rhs)
            in_tags.append(r.tag)
    # variable bounds as inequality rows: x >= 0 always, alpha <= 1
    for i in range(nv):
        in_rows.append((np.array([i]), np.array([-1.0])))
        in_rhs.append(0.0)
        in_tags.append(("lb",) + inst.var_names[i])
    for i in np.nonzero(inst.alpha_mask)[0]:
        in_rows.append((np.array([i]), np.array([1.0])))
        in_rhs.append(1.0)
        in_tags.append(("ub",) + inst.var_names[i])

    A = np.zeros((len(eq_rows), nv))
    for i, (idx, coef) in enumerate(eq_rows):
        A[i, idx] = coef
    cm = K.ConstraintMatrix.from_rows(in_rows, nv, np.array(in_rhs))

    scaled = {
        "kind": kind, "c1": c1, "c2": c2,
        "A": A, "b": np.array(eq_rhs), "eq_tags": eq_tags,
        "cm": cm, "in_tags": in_tags,
        "scale": np.where(inst.alpha_mask, 1.0, KBIT),
    }
    inst._scaled = scaled
    return scaled


def kkt_residual(inst: ConvexInstance, x_bits: np.ndarray) -> float:
    """Max-norm KKT residual of a candidate point on the full instance.

    Multipliers are recovered deterministically: equality duals and a
    common complementarity level kappa for all comfortably slack rows
    (their multiplier is kappa/s_i, the central-path shape), plus free
    nonnegative multipliers for rows with essentially zero slack, fit by
    nonnegative least squares.  The result is 0 exactly at an optimum.
    """
    x_bits = np.asarray(x_bits, dtype=float)
    if x_bits.shape != (inst.n_vars,):
        raise ValueError(
            f"point has dimension {x_bits.shape}, expected ({inst.n_vars},)"
        )
    sc = _scaled_full(inst)
    x = x_bits / sc["scale"]

    fval = K.obj_value(sc["kind"], sc["c1"], sc["c2"], x)
    _, grad, _ = K.obj_eval(sc["kind"], sc["c1"], sc["c2"], x)

    res = 0.0
    A, b = sc["A"], sc["b"]
    if A.size:
        eq_res = np.abs(A @ x - b) / np.maximum(1.0, np.abs(b))
        res = max(res, float(np.max(eq_res)))
    elif b.size:
        res = max(res, float(np.max(np.abs(b) / np.maximum(1.0, np.abs(b)))))

    cm = sc["cm"]
    s = K.slacks(cm, x)
    if s.size:
        viol = np.maximum(0.0, -s) / np.maximum(1.0, np.abs(cm.h))
        res = max(res, float(np.max(viol)))

    # Dual recovery: rows with essentially zero slack get individual
    # multipliers (the active set spans many magnitudes); comfortably slack
    # rows can share the central-path shape lambda_i = kappa / s_i.  Any
    # recovered multiplier set certifies an upper bound on the violation, so
    # fit once without and once with the kappa column and keep the better
    # certificate (the kappa-free fit is exact at true optima).
    grad_norm = max(1.0, float(np.max(np.abs(grad)))) if grad.size else 1.0
    fnorm = max(1.0, abs(fval))
    near = s <= _NEAR_ACTIVE * np.maximum(1.0, np.abs(cm.h))
    far = ~near
    n_near = int(np.sum(near))

    def fit(with_kappa):
        cols = []
        if A.size:
            cols.append(A.T)
            cols.append(-A.T)
        if with_kappa and np.any(far):
            cols.append((cm.dense[far].T @ (1.0 / s[far]))[:, None])
        if n_near:
            cols.append(cm.dense[near].T)
        if not cols:
            return float(np.max(np.abs(grad))) / grad_norm if grad.size else 0.0
        M = np.hstack(cols)
        z, _ = scipy.optimize.nnls(M, -grad)
        r = float(np.max(np.abs(M @ z + grad))) / grad_norm
        pos = 2 * A.shape[0] if A.size else 0
        if with_kappa and np.any(far):
            r = max(r, z[pos] / fnorm)
            pos += 1
        if n_near:
            comp = np.abs(z[pos:pos + n_near] * s[near])
            if comp.size:
                r = max(r, float(np.max(comp)) / fnorm)
        return r

    dual_res = fit(False)
    if dual_res > 1e-14:
        dual_res = min(dual_res, fit(True))
    return max(res, dual_res)


# --------------------------------------------------------------------------
# reduction: fold structurally forced-zero variables, drop implied rows
# --------------------------------------------------------------------------

@dataclass
class _Reduced:
    keep: np.ndarray            # indices of surviving variables
    pos_map: dict               # full index -> reduced index
    A: np.ndarray
    b: np.ndarray
    cm: K.ConstraintMatrix      # structural inequality rows only
    ub: np.ndarray              # upper bounds (inf where unbounded); lb is 0
    kind: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    infeasible_reason: Optional[str] = None
    infeasible_rows: tuple = ()


def _forced_zero_mask(inst: ConvexInstance) -> np.ndarray:
    """Variables pinned to zero by constants (empty-cache prefixes etc.)."""
    s = inst.scenario
    p = s.params
    placement = inst.placement
    folded = np.zeros(inst.n_vars, dtype=bool)

    def fold(name):
        pos = inst.var_pos.get(name)
        if pos is not None:
            folded[pos] = True

    # per-WD prefix during which every arrived task is cached (fixed to 1)
    prefix_end = np.zeros(p.K + 1, dtype=np.int64)  # 1-based k
    for k in range(1, p.K + 1):
        seq = s.arrivals.s[k - 1]
        n0 = 0
        for n in range(1, p.N + 1):
            if placement.alpha[int(seq[n - 1]) - 1] == 1:
                n0 = n
            else:
                break
        prefix_end[k] = n0
        for j in range(1, n0 + 1):
            fold(("dloc", k, j))
            fold(("doff2", k, j))

    # MEC execution is forced idle while no WD has offloaded anything
    def off_absent(k, j):
        pos = inst.var_pos.get(("doff2", k, j))
        return pos is None or folded[pos]

    jstar = 0
    for j in range(1, p.N):
        if all(off_absent(k, j) for k in range(1, p.K + 1)):
            jstar = j
        else:
            break
    for n in range(2, min(jstar + 1, p.N) + 1):
        fold(("dmec2", n))

    # Phase I collapses when the (fully fixed) placement caches nothing
    if placement.is_fully_fixed and placement.cached_bits(s.library.D) == 0.0:
        for i in range(1, p.N_p):
            fold(("doff1", i))
        for i in range(2, p.N_p + 1):
            fold(("dmec1", i))
    return folded


def _reduce(inst: ConvexInstance) -> _Reduced:
    sc = _scaled_full(inst)
    folded = _forced_zero_mask(inst)
    keep = np.nonzero(~folded)[0]
    pos_map = {int(f): i for i, f in enumerate(keep)}
    nv = keep.size

    kind = sc["kind"][keep]
    c1 = sc["c1"][keep]
    c2 = sc["c2"][keep]
    ub = np.where(inst.alpha_mask[keep], 1.0, np.inf)

    eq_rows, eq_rhs = [], []
    in_rows, in_rhs, in_tags = [], [], []
    for r in inst.rows:
        coef_full = _row_scaled_coef(inst, r)
        rhs = r.rhs / KBIT
        live = [(pos_map[int(j)], c) for j, c in zip(r.idx, coef_full)
                if int(j) in pos_map]
        if not live:
            if r.sense == "==" and abs(rhs) > _CONST_TOL:
                return _Reduced(
                    keep=keep, pos_map=pos_map, A=np.zeros((0, nv)),
                    b=np.zeros(0), cm=None, ub=ub, kind=kind, c1=c1, c2=c2,
                    infeasible_reason=f"constant equality {r.tag} has rhs {r.rhs}",
                    infeasible_rows=(r.tag,),
                )
            if r.sense == "<=" and rhs < -_CONST_TOL:
                return _Reduced(
                    keep=keep, pos_map=pos_map, A=np.zeros((0, nv)),
                    b=np.zeros(0), cm=None, ub=ub, kind=kind, c1=c1, c2=c2,
                    infeasible_reason=f"constant inequality {r.tag} violated "
                                      f"({r.rhs} < 0)",
                    infeasible_rows=(r.tag,),
                )
            continue
        idx = np.array([i for i, _ in live], dtype=np.int64)
        coef = np.array([c for _, c in live])
        if r.sense == "==":
            eq_rows.append((idx, coef))
            eq_rhs.append(rhs)
        else:
            in_rows.append((idx, coef))
            in_rhs.append(rhs)
            in_tags.append(r.tag)

    A = np.zeros((len(eq_rows), nv))
    for i, (idx, coef) in enumerate(eq_rows):
        A[i, idx] = coef
    b = np.array(eq_rhs)

    # drop inequality rows whose slack is constant on the equality manifold;
    # a negative constant slack certifies infeasibility
    kept_in = []
    if in_rows and A.size:
        Gs = np.zeros((len(in_rows), nv))
        for i, (idx, coef) in enumerate(in_rows):
            Gs[i, idx] = coef
        lam, *_ = np.linalg.lstsq(A.T, Gs.T, rcond=None)
        resid = Gs.T - A.T @ lam
        for i in range(len(in_rows)):
            scale = max(1.0, float(np.max(np.abs(Gs[i]))))
            if float(np.max(np.abs(resid[:, i]))) <= _IMPLIED_TOL * scale:
                slack_const = in_rhs[i] - float(lam[:, i] @ b)
                if slack_const < -_CONST_TOL * max(1.0, abs(in_rhs[i])):
                    return _Reduced(
                        keep=keep, pos_map=pos_map, A=A, b=b, cm=None, ub=ub,
                        kind=kind, c1=c1, c2=c2,
                        infeasible_reason=(
                            f"inequality {in_tags[i]} conflicts with the "
                            f"equality constraints (implied slack {slack_const:.3e})"
                        ),
                        infeasible_rows=(in_tags[i],),
                    )
                continue  # implied row: enforced by the equalities
            kept_in.append(i)
    else:
        kept_in = list(range(len(in_rows)))

    cm = K.ConstraintMatrix.from_rows(
        [in_rows[i] for i in kept_in], nv,
        np.array([in_rhs[i] for i in kept_in]),
    )
    return _Reduced(keep=keep, pos_map=pos_map, A=A, b=b, cm=cm, ub=ub,
                    kind=kind, c1=c1, c2=c2)


def _interior_start(red: _Reduced):
    """Strictly feasible point via an auxiliary max-min-slack LP.

    maximize m  s.t.  G x + w m <= h,  0 + m <= x,  x + m <= ub,  A x = b.
    """
    cm, A, b = red.cm, red.A, red.b
    n = red.kind.size
    blocks = []
    rhs = []
    if cm.m:
        w = np.maximum(1.0, np.max(np.abs(cm.dense), axis=1))
        blocks.append(np.hstack([cm.dense, w[:, None]]))
        rhs.append(cm.h)
    eye = np.eye(n)
    blocks.append(np.hstack([-eye, np.ones((n, 1))]))          # m - x <= 0
    rhs.append(np.zeros(n))
    fin = np.isfinite(red.ub)
    if np.any(fin):
        blocks.append(np.hstack([eye[fin], np.ones((int(fin.sum()), 1))]))
        rhs.append(red.ub[fin])
    A_ub = np.vstack(blocks)
    b_ub = np.concatenate(rhs)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * n + [(None, 10.0)]
    kwargs = dict(c=c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if A.size:
        kwargs["A_eq"] = np.hstack([A, np.zeros((A.shape[0], 1))])
        kwargs["b_eq"] = b
    lp = scipy.optimize.linprog(**kwargs)
    if not lp.success:
        return None, f"interior-start LP failed: {lp.message}"
    margin = lp.x[-1]
    if margin <= 1e-9:
        return None, (
            "no strictly interior point exists "
            f"(max scaled slack {margin:.3e})"
        )
    return lp.x[:n], None


def _unfold_bits(inst: ConvexInstance, red: _Reduced, x_red: np.ndarray) -> np.ndarray:
    sc = _scaled_full(inst)
    x_full = np.zeros(inst.n_vars)
    x_full[red.keep] = x_red
    return x_full * sc["scale"]


def schedule_from_point(inst: ConvexInstance, x_bits: np.ndarray) -> Schedule:
    """Materialize the full Schedule (structural zeros included) from a point."""
    p = inst.scenario.params
    d_off_p1 = np.zeros(p.N_p)
    d_mec_p1 = np.zeros(p.N_p)
    d_loc = np.zeros((p.K, p.N))
    d_off = np.zeros((p.K, p.N))
    d_mec = np.zeros(p.N)
    for i, name in enumerate(inst.var_names):
        v = max(0.0, float(x_bits[i]))  # clip barrier-interior dust
        if name[0] == "doff1":
            d_off_p1[name[1] - 1] = v
        elif name[0] == "dmec1":
            d_mec_p1[name[1] - 1] = v
        elif name[0] == "dloc":
            d_loc[name[1] - 1, name[2] - 1] = v
        elif name[0] == "doff2":
            d_off[name[1] - 1, name[2] - 1] = v
        elif name[0] == "dmec2":
            d_mec[name[1] - 1] = v
    return Schedule(d_off_p1=d_off_p1, d_mec_p1=d_mec_p1,
                    d_loc=d_loc, d_off=d_off, d_mec=d_mec)


def alpha_from_point(inst: ConvexInstance, x_bits: np.ndarray) -> np.ndarray:
    alpha = np.zeros(inst.placement.L)
    for ell in range(1, inst.placement.L + 1):
        a = inst.placement.alpha[ell - 1]
        if a is None:
            alpha[ell - 1] = min(1.0, max(0.0, float(x_bits[inst.var_pos[("alpha", ell)]])))
        else:
            alpha[ell - 1] = float(a)
    return alpha


def solve(
    inst: ConvexInstance,
    tol: float = 1e-8,
    gap_target: float = 1e-7,
) -> ConvexSolution:
    """Barrier solve to a KKT-certified optimum.

    `tol` bounds the independently recomputed KKT residual (scaled,
    dimensionless); `gap_target` bounds the final barrier certificate
    m/t in scaled units, which controls how tight `certified_lower` is.
    """
    s = inst.scenario
    L = s.params.L

    def _infeasible(reason, rows):
        return ConvexSolution(
            status=SolveStatus.INFEASIBLE,
            x=np.zeros(inst.n_vars),
            alpha=np.zeros(L),
            schedule=Schedule.zeros(s.params),
            objective=np.inf,
            certified_lower=np.inf,
            kkt_residual=np.inf,
            infeasible_certificate=f"{reason} [rows: {list(rows)}]",
        )

    if inst.infeasible:
        return _infeasible(inst.infeasible_reason, inst.infeasible_rows)

    red = _reduce(inst)
    if red.infeasible_reason is not None:
        return _infeasible(red.infeasible_reason, red.infeasible_rows)

    if red.keep.size == 0:
        x_bits = np.zeros(inst.n_vars)
        sched = schedule_from_point(inst, x_bits)
        obj, _ = energy.objective(s, sched)
        return ConvexSolution(
            status=SolveStatus.OPTIMAL,
            x=x_bits,
            alpha=alpha_from_point(inst, x_bits),
            schedule=sched,
            objective=obj,
            certified_lower=obj,
            kkt_residual=kkt_residual(inst, x_bits),
        )

    x0, err = _interior_start(red)
    if err is not None:
        raise SolverError(err)
    # make the equalities exact (the LP meets them to solver precision only)
    if red.A.size:
        corr, *_ = np.linalg.lstsq(red.A, red.b - red.A @ x0, rcond=None)
        x0 = x0 + corr
        bad = (
            (red.cm.m and np.min(K.slacks(red.cm, x0)) <= 0)
            or np.min(x0) <= 0
            or np.min(red.ub - x0) <= 0
        )
        if bad:
            raise SolverError("interior start lost strict feasibility")

    # keep the best-certified iterate: at very large barrier parameters the
    # KKT residual can degrade again once the Newton system conditioning
    # hits float limits
    best = {"kkt": np.inf, "x": None, "gap": np.inf}

    def stop_fn(x_red, gap):
        xb = _unfold_bits(inst, red, x_red)
        r = kkt_residual(inst, xb)
        if r < best["kkt"]:
            best.update(kkt=r, x=xb, gap=gap)
        return r <= 0.5 * tol and gap <= gap_target

    result = newton.solve_barrier(
        red.kind, red.c1, red.c2, red.A, red.b, red.cm, red.ub, x0,
        stop_fn=stop_fn,
    )
    if best["x"] is None:
        x_bits = _unfold_bits(inst, red, result.x)
        resid = kkt_residual(inst, x_bits)
        gap = result.gap
    else:
        x_bits, resid, gap = best["x"], best["kkt"], best["gap"]
    sched = schedule_from_point(inst, x_bits)
    obj, _ = energy.objective(s, sched)
    status = SolveStatus.OPTIMAL if resid <= tol else SolveStatus.MAX_ITER
    lower = obj - (2.0 * gap / E_SCALE + 1e-14 * max(1.0, abs(obj)))
    return ConvexSolution(
        status=status,
        x=x_bits,
        alpha=alpha_from_point(inst, x_bits),
        schedule=sched,
        objective=obj,
        certified_lower=lower,
        kkt_residual=resid,
        newton_iters=result.newton_iters,
        barrier_gap=gap,
    )


def dump_instance(inst: ConvexInstance) -> str:
    """Human/diff-friendly text dump for cross-checking with other solvers."""
    out = []
    out.append(f"# convex subproblem: {inst.n_vars} variables, {len(inst.rows)} rows")
    out.append(f"# placement: {inst.placement.bitmap()}")
    if inst.infeasible:
        out.append(f"# structurally infeasible: {inst.infeasible_reason}")
    out.append("variables:")
    for i, name in enumerate(inst.var_names):
        kind = {0: "linear0", 1: "cubic", 2: "explog"}[int(inst.obj_kind[i])]
        term = {
            0: "0",
            1: f"{inst.obj_c1[i]!r}*x^3",
            2: f"{inst.obj_c1[i]!r}*(2^(x/{inst.obj_c2[i]!r})-1)",
        }[int(inst.obj_kind[i])]
        ub = " in [0,1]" if inst.alpha_mask[i] else " >= 0"
        out.append(f"  x{i} = {name}{ub}  obj[{kind}] {term}")
    out.append("constraints:")
    for r in inst.rows:
        lhs = " + ".join(
            f"{c:+g}*x{j}" for j, c in zip(r.idx, r.coef)
        ) or "0"
        out.append(f"  {r.tag}: {lhs} {r.sense} {r.rhs!r}")
    return "\n".join(out)
