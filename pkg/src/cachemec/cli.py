"""Command-line interface: gen / validate / solve / sweep.

Sizes and capacities are given in Kbits and bandwidths in MHz on the
command line (converted to bits/Hz at this boundary); scenario files
store SI units with an explicit units block.  Values from --config JSON
files override flags.  Logs go to stderr, results to stdout or -o.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bnb import BnbConfig
from .harness import (
    DEFAULT_BNB_CAP,
    SweepSpec,
    rows_to_csv,
    run_single,
    run_sweep,
    write_csv,
)
from .scenario import GenConfig, gen_scenario, load_scenario, save_scenario
from .schemes import SchemeId
from .model import validate_scenario

log = logging.getLogger(__name__)

_GEN_FLAGS = (
    # (flag, GenConfig field, type, help, unit-scale)
    ("--wds", "K", int, "number of wireless devices", 1),
    ("--tasks", "L", int, "task library size", 1),
    ("--np-slots", "N_p", int, "task-caching phase slots", 1),
    ("--n-slots", "N", int, "arrival/execution phase slots", 1),
    ("--tau", "tau", float, "slot length [s]", 1),
    ("--w0", "w0", float, "MEC energy weight", 1),
    ("--w1", "w1", float, "WD energy weight", 1),
    ("--sigma2", "sigma2", float, "AWGN power at the AP [W]", 1),
    ("--zeta0", "zeta0", float, "MEC capacitance coefficient", 1),
    ("--c0", "C0", float, "MEC cycles per bit", 1),
    ("--zeta-wd", "zeta_wd", float, "WD capacitance coefficient", 1),
    ("--c-wd", "C_wd", float, "WD cycles per bit", 1),
    ("--bandwidth-mhz", "bandwidth", float, "Phase-II bandwidth [MHz]", 1e6),
    ("--bandwidth-p1-mhz", "bandwidth_p1", float, "Phase-I bandwidth [MHz]", 1e6),
    ("--rician-factor", "rician_factor", float, "Rician factor", 1),
    ("--pathloss-exp", "pathloss_exp", float, "pathloss exponent", 1),
    ("--zipf-shape", "zipf_shape", float, "Zipf popularity shape", 1),
    ("--size-min-kbits", "size_min", float, "min task size [Kbits]", 1e3),
    ("--size-max-kbits", "size_max", float, "max task size [Kbits]", 1e3),
    ("--dmax-kbits", "dmax", float, "cache capacity [Kbits]", 1e3),
    ("--dist-min", "dist_min", float, "nearest WD distance [m]", 1),
    ("--dist-max", "dist_max", float, "farthest WD distance [m]", 1),
)


def _add_gen_args(ap: argparse.ArgumentParser, seed_required: bool):
    ap.add_argument("--seed", type=int, required=seed_required,
                    help="generator seed (required)")
    for flag, _field, typ, help_, _scale in _GEN_FLAGS:
        ap.add_argument(flag, type=typ, default=None, help=help_)
    ap.add_argument("--omega0-db", type=float, default=None,
                    help="pathloss at 1 m [dB], e.g. -32")
    ap.add_argument("--config", type=str, default=None,
                    help="JSON config file; its values override flags")


def _gen_config(args) -> GenConfig:
    values = {}
    for flag, fld, _typ, _help, scale in _GEN_FLAGS:
        v = getattr(args, flag.lstrip("-").replace("-", "_"))
        if v is not None:
            values[fld] = v * scale if scale != 1 else v
    if args.omega0_db is not None:
        values["omega0"] = 10.0 ** (args.omega0_db / 10.0)
    if args.seed is not None:
        values["seed"] = args.seed
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(GenConfig(seed=0).__dict__)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)  # config file overrides flags
    if "seed" not in values:
        raise SystemExit("a seed is required (--seed or config file)")
    cfg = GenConfig(**values)
    cfg.validate()
    return cfg


def _cmd_gen(args) -> int:
    cfg = _gen_config(args)
    scen = gen_scenario(cfg)
    save_scenario(scen, args.output)
    log.info("wrote %s (K=%d, L=%d, N_p=%d, N=%d)", args.output,
             cfg.K, cfg.L, cfg.N_p, cfg.N)
    return 0


def _cmd_validate(args) -> int:
    try:
        scen = load_scenario(args.scenario)
    except Exception as exc:
        print(f"INVALID: {exc}")
        return 1
    result = validate_scenario(scen)
    if result.ok:
        print("OK")
        return 0
    for v in result.violations:
        print(f"violation: {v}")
    return 1


def _cmd_solve(args) -> int:
    scheme = SchemeId(args.scheme)
    cfg = BnbConfig(epsilon=args.epsilon, max_nodes=args.max_nodes,
                    solver_tol=args.tol)
    if args.scenario:
        source = args.scenario
    else:
        source = _gen_config(args)
    rep, summary = run_single(source, scheme, cfg, bnb_cap=args.bnb_cap)
    print(summary)
    return 0


def _parse_values(text: str, var: str) -> list:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if var == "dmax":
        vals = [v * 1e3 for v in vals]  # CLI sweeps capacity in Kbits
    if var == "L":
        vals = [int(v) for v in vals]
    return vals


def _cmd_sweep(args) -> int:
    base = _gen_config(args)
    if args.seeds:
        seeds = [int(v) for v in args.seeds.split(",") if v.strip()]
    else:
        seeds = [args.seed + i for i in range(args.num_seeds)]
    schemes = [SchemeId(v) for v in args.schemes.split(",") if v.strip()]
    spec = SweepSpec(
        base=base,
        var=args.var,
        values=_parse_values(args.values, args.var),
        seeds=seeds,
        schemes=schemes,
        bnb_epsilon=args.epsilon,
        bnb_cap=args.bnb_cap,
        solver_tol=args.tol,
        workers=args.workers,
        measure_runtime=args.timing,
    )
    rows = run_sweep(spec)
    if args.output:
        write_csv(rows, args.output)
        log.info("wrote %d rows to %s", len(rows), args.output)
    else:
        sys.stdout.write(rows_to_csv(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cachemec",
        description="energy-minimal task caching and offloading for MEC blocks",
    )
    ap.add_argument("-v", "--verbose", action="count", default=0,
                    help="-v: progress, -vv: solver internals")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario file")
    _add_gen_args(p, seed_required=True)
    p.add_argument("-o", "--output", required=True, help="scenario JSON path")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("validate", help="validate a scenario file")
    p.add_argument("scenario", help="scenario JSON path")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("solve", help="solve one scenario with one scheme")
    p.add_argument("--scenario", help="scenario JSON path (otherwise generate)")
    _add_gen_args(p, seed_required=False)
    p.add_argument("--scheme", required=True,
                   choices=[s.value for s in SchemeId])
    p.add_argument("--epsilon", type=float, default=1e-9,
                   help="BnB absolute gap [J]")
    p.add_argument("--max-nodes", type=int, default=100_000)
    p.add_argument("--bnb-cap", type=int, default=DEFAULT_BNB_CAP,
                   help="refuse BnB searches above this task count")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="convex solver KKT tolerance")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep", help="multi-seed sweep, CSV output")
    _add_gen_args(p, seed_required=True)
    p.add_argument("--var", required=True, choices=["dmax", "sigma2", "L"])
    p.add_argument("--values", required=True,
                   help="comma-separated sweep values (dmax in Kbits)")
    p.add_argument("--seeds", help="explicit comma-separated seed list")
    p.add_argument("--num-seeds", type=int, default=20,
                   help="seeds used when --seeds is absent: seed..seed+n-1")
    p.add_argument("--schemes",
                   default=",".join(s.value for s in SchemeId))
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--bnb-cap", type=int, default=DEFAULT_BNB_CAP)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall time per cell (breaks byte-determinism)")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.set_defaults(fn=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        stream=sys.stderr, level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
