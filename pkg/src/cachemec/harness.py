"""Experiment harness: single solves and multi-seed sweeps with CSV output.

A sweep evaluates every (sweep value, seed, scheme) cell on a freshly
generated scenario and emits one CSV row per cell plus one per-value
mean row per scheme.  Cells are pure functions of the spec, so the CSV
is byte-identical across runs and across worker counts; per-cell wall
time is only recorded when `measure_runtime` is set (it is the one
nondeterministic column).
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .bnb import BnbConfig
from .model import Scenario, SolveReport, validate_scenario
from .scenario import GenConfig, gen_scenario, load_scenario
from .schemes import SchemeId, run_scheme

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scheme", "sweep_value", "seed", "objective_J",
    "e_mec_p1", "e_off_p1", "e_mec_p2", "e_loc_total", "e_off_total",
    "kkt_residual", "bnb_gap", "node_count", "runtime_s", "error",
)

_NUMERIC_COLUMNS = (
    "objective_J", "e_mec_p1", "e_off_p1", "e_mec_p2", "e_loc_total",
    "e_off_total", "kkt_residual", "bnb_gap", "node_count", "runtime_s",
)

#: Schemes that run a branch-and-bound search (subject to the size cap).
_BNB_SCHEMES = (SchemeId.BNB, SchemeId.FULL_OFFLOADING, SchemeId.FULL_LOCAL)

DEFAULT_BNB_CAP = 16


class BnbSizeCapError(ValueError):
    """Raised when a BnB-backed scheme is requested beyond the task cap."""


@dataclass
class SweepSpec:
    base: GenConfig
    var: str                                   # "dmax" | "sigma2" | "L"
    values: list
    seeds: list
    schemes: list = field(default_factory=lambda: list(SchemeId))
    bnb_epsilon: float = 1e-9
    bnb_cap: int = DEFAULT_BNB_CAP
    solver_tol: float = 1e-8
    workers: int = 1
    measure_runtime: bool = False

    def validate(self):
        if self.var not in ("dmax", "sigma2", "L"):
            raise ValueError(f"unknown sweep variable {self.var!r}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if any(v <= 0 for v in self.values if self.var != "L"):
            raise ValueError("sweep values must be positive")
        max_L = max(self.values) if self.var == "L" else self.base.L
        if any(sch in _BNB_SCHEMES for sch in self.schemes) and max_L > self.bnb_cap:
            raise BnbSizeCapError(
                f"BnB-backed schemes refused: L={max_L} exceeds the cap "
                f"{self.bnb_cap} (the search may visit up to 2^(L+1) nodes); "
                f"raise bnb_cap explicitly to override"
            )


def _cell_config(base: GenConfig, var: str, value, seed: int) -> GenConfig:
    kwargs = {"seed": int(seed)}
    if var == "L":
        kwargs["L"] = int(value)
    else:
        kwargs[var] = float(value)
    return replace(base, **kwargs)


def _fmt(x) -> str:
    # repr round-trips doubles exactly and is stable across runs
    return repr(float(x))


def _row_from_report(scheme: SchemeId, value, seed, rep: SolveReport,
                     measure_runtime: bool) -> dict:
    # energy columns carry the unweighted Joules of each term
    return {
        "scheme": scheme.value,
        "sweep_value": _fmt(value),
        "seed": str(seed),
        "objective_J": _fmt(rep.objective),
        "e_mec_p1": _fmt(rep.breakdown.e_mec_p1),
        "e_off_p1": _fmt(rep.breakdown.e_off_p1),
        "e_mec_p2": _fmt(rep.breakdown.e_mec_p2),
        "e_loc_total": _fmt(float(np.sum(rep.breakdown.e_loc))),
        "e_off_total": _fmt(float(np.sum(rep.breakdown.e_off))),
        "kkt_residual": _fmt(rep.kkt_residual),
        "bnb_gap": _fmt(rep.bnb_gap),
        "node_count": _fmt(rep.node_count),
        "runtime_s": _fmt(rep.runtime) if measure_runtime else "",
        "error": "",
    }


def _error_row(scheme: SchemeId, value, seed, message: str) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row.update({
        "scheme": scheme.value,
        "sweep_value": _fmt(value),
        "seed": str(seed),
        "error": message,
    })
    return row


def _run_cell(args) -> dict:
    base_dict, var, value, seed, scheme_name, epsilon, tol, measure_runtime = args
    scheme = SchemeId(scheme_name)
    try:
        cfg = _cell_config(GenConfig(**base_dict), var, value, seed)
        scen = gen_scenario(cfg)
        bcfg = BnbConfig(epsilon=epsilon, solver_tol=tol)
        rep = run_scheme(scen, scheme, bcfg)
        return _row_from_report(scheme, value, seed, rep, measure_runtime)
    except Exception as exc:  # per-cell failures become data, not crashes
        return _error_row(scheme, value, seed, f"{type(exc).__name__}: {exc}")


def _mean_rows(rows: list, spec: SweepSpec) -> list:
    out = []
    for value in spec.values:
        vkey = _fmt(value)
        for scheme in spec.schemes:
            cell_rows = [
                r for r in rows
                if r["scheme"] == scheme.value and r["sweep_value"] == vkey
                and not r["error"]
            ]
            row = {c: "" for c in CSV_COLUMNS}
            row.update({"scheme": scheme.value, "sweep_value": vkey,
                        "seed": "mean"})
            if not cell_rows:
                row["error"] = "no successful seed rows"
            else:
                for col in _NUMERIC_COLUMNS:
                    vals = [r[col] for r in cell_rows]
                    if any(v == "" for v in vals):
                        continue
                    row[col] = _fmt(np.mean([float(v) for v in vals]))
            out.append(row)
    return out


def run_sweep(spec: SweepSpec) -> list:
    """All CSV rows (seed cells in deterministic order, then mean rows)."""
    spec.validate()
    base_dict = spec.base.__dict__.copy()
    cells = [
        (base_dict, spec.var, value, seed, scheme.value,
         spec.bnb_epsilon, spec.solver_tol, spec.measure_runtime)
        for value in spec.values
        for seed in spec.seeds
        for scheme in spec.schemes
    ]
    if spec.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    for row in rows:
        if row["error"]:
            log.warning("cell failed: scheme=%s value=%s seed=%s: %s",
                        row["scheme"], row["sweep_value"], row["seed"],
                        row["error"])
    return rows + _mean_rows(rows, spec)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def run_single(
    source: Union[Scenario, GenConfig, str],
    scheme: SchemeId,
    cfg: Optional[BnbConfig] = None,
    bnb_cap: int = DEFAULT_BNB_CAP,
) -> tuple:
    """Solve one scenario with one scheme; returns (SolveReport, summary text).

    `source` is a Scenario, a GenConfig, or a path to a scenario file.
    """
    if isinstance(source, str):
        scen = load_scenario(source)
    elif isinstance(source, GenConfig):
        scen = gen_scenario(source)
    else:
        scen = source
        result = validate_scenario(scen)
        if not result.ok:
            raise ValueError("invalid scenario: " + "; ".join(result.violations))
    if scheme in _BNB_SCHEMES and scen.params.L > bnb_cap:
        raise BnbSizeCapError(
            f"scheme {scheme.value} refused: L={scen.params.L} exceeds the "
            f"BnB cap {bnb_cap}; raise the cap explicitly to override"
        )
    cfg = cfg or BnbConfig()
    t0 = time.perf_counter()
    rep = run_scheme(scen, scheme, cfg)
    rep.runtime = time.perf_counter() - t0
    return rep, summarize(scen, scheme, rep)


def summarize(scen: Scenario, scheme: SchemeId, rep: SolveReport) -> str:
    p = scen.params
    bd = rep.breakdown
    lines = [
        f"scheme            : {scheme.value}",
        f"objective         : {rep.objective:.9e} J (weighted, w0={p.w0}, w1={p.w1})",
        f"  caching phase   : {bd.phase1_weighted(p.w0, p.w1):.9e} J"
        f"  (mec {bd.e_mec_p1:.3e} J, offload {bd.e_off_p1:.3e} J)",
        f"  execution phase : {bd.phase2_weighted(p.w0, p.w1):.9e} J"
        f"  (mec {bd.e_mec_p2:.3e} J, local {float(np.sum(bd.e_loc)):.3e} J,"
        f" offload {float(np.sum(bd.e_off)):.3e} J)",
        f"cache placement   : {rep.placement.bitmap()}"
        f"  ({len(rep.placement.L1)}/{p.L} tasks,"
        f" {rep.placement.cached_bits(scen.library.D) / 1e3:.3f}"
        f" of {scen.library.Dmax / 1e3:.3f} Kbits)"
        + ("  [capacity-repaired]" if rep.repaired else ""),
        f"bnb gap           : {rep.bnb_gap:.3e} J over {rep.node_count} node(s)",
        f"kkt residual      : {rep.kkt_residual:.3e}",
        f"runtime           : {rep.runtime:.3f} s",
    ]
    return "\n".join(lines)
