"""Energy-minimal task caching and computation offloading for multiuser MEC.

Exact epsilon-optimal solves via branch-and-bound over the Boolean cache
placement with barrier-certified convex subproblems, two low-complexity
caching heuristics, three benchmark schemes, seeded scenario generation
and a sweep CLI (`python -m cachemec`).
"""

import os as _os

# The solver factors many small dense systems; multi-threaded BLAS only adds
# sync overhead and run-to-run noise there.  Effective only when numpy has
# not been imported yet; export the variables yourself otherwise.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from .model import (
    FREE,
    ArrivalSequences,
    CachePlacement,
    ChannelSet,
    Scenario,
    Schedule,
    SolveReport,
    SystemParams,
    TaskLibrary,
    ValidationResult,
    arrived_bits,
    build_cts,
    select_offload_wd,
    validate_scenario,
)
from .energy import EnergyBreakdown, objective
from .scenario import (
    GenConfig,
    ScenarioFormatError,
    gen_scenario,
    load_scenario,
    save_scenario,
)
from .subproblem import (
    ConvexInstance,
    ConvexSolution,
    SolveStatus,
    SolverError,
    assemble,
    kkt_residual,
    solve,
)
from .kernels import IMPL_NAME as KERNEL_IMPL

__version__ = "0.1.0"

__all__ = [
    "FREE",
    "ArrivalSequences",
    "CachePlacement",
    "ChannelSet",
    "ConvexInstance",
    "ConvexSolution",
    "EnergyBreakdown",
    "GenConfig",
    "KERNEL_IMPL",
    "Scenario",
    "ScenarioFormatError",
    "Schedule",
    "SolveReport",
    "SolveStatus",
    "SolverError",
    "SystemParams",
    "TaskLibrary",
    "ValidationResult",
    "arrived_bits",
    "assemble",
    "build_cts",
    "gen_scenario",
    "kkt_residual",
    "load_scenario",
    "objective",
    "save_scenario",
    "select_offload_wd",
    "solve",
    "validate_scenario",
]
