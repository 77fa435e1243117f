"""Epsilon-optimal branch-and-bound over the Boolean caching vector.

Each node fixes a subset of caching decisions (L0 to 0, L1 to 1) and
relaxes the rest to [0, 1].  Bounding solves the relaxation for a valid
lower bound and rounds-and-repairs it into a feasible integral incumbent
for the upper bound; branching splits on the most fractional relaxed
value; nodes whose lower bound reaches the global upper bound are
pruned.  The returned incumbent is certified within `epsilon` Joules of
the optimum by the surviving global bounds.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import energy, subproblem
from .model import CachePlacement, Scenario, SolveReport
from .subproblem import ConvexSolution, SolveStatus

log = logging.getLogger(__name__)


class NoFeasiblePlacementError(RuntimeError):
    """Every placement in the search space is infeasible (pinned variants)."""


@dataclass
class BnbConfig:
    epsilon: float = 1e-9             # absolute certified gap [J]
    max_nodes: int = 100_000          # bounded nodes before giving up
    branch_rule: str = "most-fractional"   # or "lowest-index"
    node_order: str = "best-first"         # or "depth-first"
    solver_tol: float = 1e-8

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.branch_rule not in ("most-fractional", "lowest-index"):
            raise ValueError(f"unknown branch_rule {self.branch_rule!r}")
        if self.node_order not in ("best-first", "depth-first"):
            raise ValueError(f"unknown node_order {self.node_order!r}")


@dataclass
class BnbNode:
    placement: CachePlacement
    lower: float = -np.inf            # valid lower bound [J]
    upper: float = np.inf             # objective of this node's incumbent [J]
    relaxed_alpha: Optional[np.ndarray] = None
    node_id: int = 0

    @property
    def depth(self) -> int:
        return self.placement.L - len(self.placement.free_indices)


@dataclass
class BnbEvent:
    """One machine-parseable progress record."""

    action: str                       # bound / branch / prune / fathom
    node_id: int
    depth: int
    l0: tuple
    l1: tuple
    lower: float
    global_lower: float
    global_upper: float
    detail: str = ""


@dataclass
class _Incumbent:
    placement: CachePlacement
    solution: ConvexSolution


_INT_TOL = 1e-6   # relaxed alpha counts as integral within this


def round_and_repair(
    placement: CachePlacement, relaxed_alpha: np.ndarray, D: np.ndarray,
    Dmax: float,
) -> tuple:
    """Round FREE alphas at 0.5; evict rounded-up tasks (ascending relaxed
    value) until the capacity constraint holds.  Returns (fixed placement,
    repaired flag)."""
    rounded_up = []
    fixed = placement
    for ell in placement.free_indices:
        if relaxed_alpha[ell - 1] > 0.5:
            rounded_up.append(ell)
    total = sum(D[ell - 1] for ell in placement.L1) + sum(
        D[ell - 1] for ell in rounded_up
    )
    repaired = False
    evict_order = sorted(rounded_up, key=lambda ell: (relaxed_alpha[ell - 1], ell))
    while total > Dmax and evict_order:
        out = evict_order.pop(0)
        rounded_up.remove(out)
        total -= D[out - 1]
        repaired = True
    up = set(rounded_up)
    for ell in placement.free_indices:
        fixed = fixed.with_fixed(ell, 1 if ell in up else 0)
    return fixed, repaired


def bound(
    node: BnbNode,
    s: Scenario,
    cfg: BnbConfig = None,
    pin_local: bool = False,
    pin_offload: bool = False,
) -> tuple:
    """(lower, upper, incumbent SolveReport or None) for one node.

    The relaxation provides the lower bound; rounding the relaxed alphas
    at 0.5 with capacity repair and re-solving the fixed placement
    provides the upper bound.  Infeasible nodes return (inf, inf, None).
    """
    cfg = cfg or BnbConfig()
    t0 = time.perf_counter()
    inst = subproblem.assemble(s, node.placement,
                               pin_local=pin_local, pin_offload=pin_offload)
    relaxed = subproblem.solve(inst, tol=cfg.solver_tol)
    if relaxed.status is SolveStatus.INFEASIBLE:
        node.lower = np.inf
        node.upper = np.inf
        return np.inf, np.inf, None
    node.relaxed_alpha = relaxed.alpha

    free = inst.placement.free_indices
    if not free:
        # fully fixed: the relaxation IS the node optimum
        node.lower = relaxed.objective
        node.upper = relaxed.objective
        report = _report_from_solution(s, inst.placement, relaxed,
                                       time.perf_counter() - t0)
        return node.lower, node.upper, report

    node.lower = relaxed.certified_lower
    frac = np.array([relaxed.alpha[ell - 1] for ell in free])
    if np.all(np.minimum(frac, 1.0 - frac) <= _INT_TOL):
        # integral relaxation: rounding is the identity, upper == lower
        fixed = inst.placement
        for ell in free:
            fixed = fixed.with_fixed(ell, 1 if relaxed.alpha[ell - 1] > 0.5 else 0)
        node.lower = relaxed.objective
        node.upper = relaxed.objective
        report = _report_from_solution(s, fixed, relaxed,
                                       time.perf_counter() - t0)
        return node.lower, node.upper, report

    fixed, repaired = round_and_repair(
        inst.placement, relaxed.alpha, s.library.D, s.library.Dmax
    )
    inst_up = subproblem.assemble(s, fixed,
                                  pin_local=pin_local, pin_offload=pin_offload)
    completion = subproblem.solve(inst_up, tol=cfg.solver_tol)
    if completion.status is SolveStatus.INFEASIBLE:
        # pinned variants can reject a rounding even when the node itself
        # has feasible completions; report no incumbent from this node
        node.upper = np.inf
        return node.lower, np.inf, None
    node.upper = completion.objective
    report = _report_from_solution(s, fixed, completion,
                                   time.perf_counter() - t0, repaired=repaired)
    return node.lower, node.upper, report


def _report_from_solution(
    s: Scenario, placement: CachePlacement, sol: ConvexSolution,
    runtime: float, repaired: bool = False,
) -> SolveReport:
    obj, bd = energy.objective(s, sol.schedule)
    return SolveReport(
        objective=obj,
        breakdown=bd,
        placement=placement,
        schedule=sol.schedule,
        kkt_residual=sol.kkt_residual,
        bnb_gap=0.0,
        node_count=1,
        runtime=runtime,
        repaired=repaired,
    )


def branch(node: BnbNode, rule: str = "most-fractional") -> tuple:
    """Split the node on one FREE task index into (alpha=0, alpha=1) children."""
    free = node.placement.free_indices
    if not free:
        raise ValueError("cannot branch: no FREE caching variables")
    if rule == "lowest-index" or node.relaxed_alpha is None:
        ell = free[0]
    else:
        dist = [(abs(node.relaxed_alpha[e - 1] - 0.5), e) for e in free]
        ell = min(dist)[1]
    child0 = BnbNode(placement=node.placement.with_fixed(ell, 0),
                     lower=node.lower)
    child1 = BnbNode(placement=node.placement.with_fixed(ell, 1),
                     lower=node.lower)
    return child0, child1


def solve_bnb(
    s: Scenario,
    cfg: BnbConfig = None,
    root_placement: CachePlacement = None,
    pin_local: bool = False,
    pin_offload: bool = False,
    on_event: Optional[Callable[[BnbEvent], None]] = None,
) -> SolveReport:
    """Best-first (or depth-first) tree search to an epsilon-certified optimum.

    `root_placement` restricts the search space by pre-fixing caching
    decisions (all FREE by default).  `on_event` receives every progress
    record that is also emitted on the module logger.
    """
    cfg = cfg or BnbConfig()
    t_start = time.perf_counter()
    if root_placement is None:
        root_placement = CachePlacement.all_free(s.params.L)

    next_id = 0
    counter = 0  # deterministic heap tie-break
    incumbent: Optional[SolveReport] = None
    global_upper = np.inf

    def emit(action, node, detail=""):
        ev = BnbEvent(
            action=action, node_id=node.node_id, depth=node.depth,
            l0=tuple(sorted(node.placement.L0)),
            l1=tuple(sorted(node.placement.L1)),
            lower=node.lower, global_lower=global_lower,
            global_upper=global_upper, detail=detail,
        )
        log.info(
            "action=%s node=%d depth=%d l0=%s l1=%s lower=%.12e glb=%.12e gub=%.12e %s",
            ev.action, ev.node_id, ev.depth,
            ",".join(map(str, ev.l0)) or "-", ",".join(map(str, ev.l1)) or "-",
            ev.lower, ev.global_lower, ev.global_upper, ev.detail,
        )
        if on_event is not None:
            on_event(ev)

    root = BnbNode(placement=root_placement, node_id=next_id)
    next_id += 1
    node_count = 1
    global_lower = -np.inf
    lo, up, rep = bound(root, s, cfg, pin_local, pin_offload)
    if rep is not None:
        incumbent, global_upper = rep, up
    global_lower = lo
    emit("bound", root)

    # open set holds nodes that may still contain something better
    open_best: list = []
    open_stack: list = []

    def push(node):
        nonlocal counter
        if cfg.node_order == "best-first":
            heapq.heappush(open_best, (node.lower, counter, node))
        else:
            open_stack.append(node)
        counter += 1

    def pop():
        if cfg.node_order == "best-first":
            return heapq.heappop(open_best)[2]
        return open_stack.pop()

    def open_lowers():
        if cfg.node_order == "best-first":
            return [item[0] for item in open_best]
        return [n.lower for n in open_stack]

    if np.isfinite(lo) and root.placement.free_indices and up - lo > 0.0:
        push(root)
    elif np.isinf(lo) and rep is None and not np.isfinite(global_upper):
        raise NoFeasiblePlacementError(
            "the root subproblem is infeasible for every placement"
        )
    else:
        emit("fathom", root)

    truncated = False
    while open_best or open_stack:
        global_lower = min(open_lowers(), default=global_upper)
        if global_upper - global_lower <= cfg.epsilon:
            break
        if node_count >= cfg.max_nodes:
            truncated = True
            break
        node = pop()
        if node.lower >= global_upper:
            emit("prune", node)
            continue
        emit("branch", node)
        for child in branch(node, cfg.branch_rule):
            child.node_id = next_id
            next_id += 1
            node_count += 1
            lo, up, rep = bound(child, s, cfg, pin_local, pin_offload)
            if rep is not None and up < global_upper:
                incumbent, global_upper = rep, up
            if not np.isfinite(lo):
                emit("fathom", child, detail="infeasible")
                continue
            emit("bound", child)
            if lo >= global_upper:
                emit("prune", child)
            elif child.placement.free_indices and up - lo > 0.0:
                push(child)
            else:
                emit("fathom", child)

    global_lower = min(open_lowers(), default=global_upper)

    if incumbent is None:
        raise NoFeasiblePlacementError("no feasible placement was found")

    runtime = time.perf_counter() - t_start
    gap = max(0.0, global_upper - global_lower)
    if truncated:
        log.warning("node budget exhausted: max_nodes=%d gap=%.3e J",
                    cfg.max_nodes, gap)
    return SolveReport(
        objective=incumbent.objective,
        breakdown=incumbent.breakdown,
        placement=incumbent.placement,
        schedule=incumbent.schedule,
        kkt_residual=incumbent.kkt_residual,
        bnb_gap=gap,
        node_count=node_count,
        runtime=runtime,
        repaired=incumbent.repaired,
    )
