"""Domain types for the cache-enabled MEC energy-minimization problem.

Conventions used across the package:

* internal units are SI: bits, seconds, Hz, Watts, Joules;
* wireless devices (WDs) are indexed k = 1..K, tasks ell = 1..L and
  time slots n = 1..N (1-based, matching the system model); numpy
  arrays are 0-based, so element (k, n) lives at ``[k - 1, n - 1]``;
* a cache placement entry is 0, 1 or FREE (= undecided / relaxed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Sentinel for an undecided caching variable inside CachePlacement.
FREE = None


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def _freeze_int(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.int64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SystemParams:
    """Static system parameters of one transmission block."""

    K: int                    # number of WDs
    L: int                    # task library size
    N_p: int                  # slots in the task-caching phase (Phase I)
    N: int                    # slots in the arrival/execution phase (Phase II)
    tau: float                # slot length [s]
    w0: float                 # energy weight of the MEC server
    w1: float                 # energy weight of the WDs
    sigma2: float             # AWGN power at the AP receiver [W]
    zeta0: float              # MEC CPU capacitance coefficient
    C0: float                 # MEC CPU cycles per input bit
    zeta_k: np.ndarray        # per-WD capacitance coefficients, shape (K,)
    C_k: np.ndarray           # per-WD cycles per input bit, shape (K,)
    B_phase1: np.ndarray      # Phase-I offload bandwidths [Hz], shape (N_p,)
    B: np.ndarray             # Phase-II bandwidths [Hz], shape (K, N)

    def __post_init__(self):
        object.__setattr__(self, "zeta_k", _freeze(self.zeta_k))
        object.__setattr__(self, "C_k", _freeze(self.C_k))
        object.__setattr__(self, "B_phase1", _freeze(self.B_phase1))
        object.__setattr__(self, "B", _freeze(self.B))

    def __eq__(self, other):
        if not isinstance(other, SystemParams):
            return NotImplemented
        return (
            (self.K, self.L, self.N_p, self.N, self.tau, self.w0, self.w1,
             self.sigma2, self.zeta0, self.C0)
            == (other.K, other.L, other.N_p, other.N, other.tau, other.w0,
                other.w1, other.sigma2, other.zeta0, other.C0)
            and np.array_equal(self.zeta_k, other.zeta_k)
            and np.array_equal(self.C_k, other.C_k)
            and np.array_equal(self.B_phase1, other.B_phase1)
            and np.array_equal(self.B, other.B)
        )


@dataclass(frozen=True)
class TaskLibrary:
    """Task input sizes D_ell [bits] and the server cache capacity [bits]."""

    D: np.ndarray             # shape (L,)
    Dmax: float

    def __post_init__(self):
        object.__setattr__(self, "D", _freeze(self.D))

    def __eq__(self, other):
        if not isinstance(other, TaskLibrary):
            return NotImplemented
        return self.Dmax == other.Dmax and np.array_equal(self.D, other.D)


@dataclass(frozen=True)
class ChannelSet:
    """Squared channel magnitudes; only |h|^2 enters any energy formula."""

    h2_phase1: np.ndarray     # |h_{k_o,i}|^2 for the selected WD, shape (N_p,)
    h2: np.ndarray            # |h_{k,n}|^2, shape (K, N)

    def __post_init__(self):
        object.__setattr__(self, "h2_phase1", _freeze(self.h2_phase1))
        object.__setattr__(self, "h2", _freeze(self.h2))

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return np.array_equal(self.h2_phase1, other.h2_phase1) and np.array_equal(
            self.h2, other.h2
        )


@dataclass(frozen=True)
class ArrivalSequences:
    """Task index s_{k,n} in {1..L} arriving at WD k at the start of slot n."""

    s: np.ndarray             # shape (K, N), int, 1-based task indices

    def __post_init__(self):
        object.__setattr__(self, "s", _freeze_int(self.s))

    def __eq__(self, other):
        if not isinstance(other, ArrivalSequences):
            return NotImplemented
        return np.array_equal(self.s, other.s)


@dataclass(frozen=True)
class Scenario:
    """One full problem instance."""

    params: SystemParams
    library: TaskLibrary
    channels: ChannelSet
    arrivals: ArrivalSequences
    k_o: int                  # selected offloading WD, 1-based

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.params == other.params
            and self.library == other.library
            and self.channels == other.channels
            and self.arrivals == other.arrivals
            and self.k_o == other.k_o
        )


@dataclass(frozen=True)
class CachePlacement:
    """Boolean caching vector with an explicit undecided (FREE) state.

    ``alpha[ell-1]`` is 0, 1 or FREE for task ell.  L0/L1 are the sets of
    task indices fixed to 0/1 (1-based).
    """

    alpha: tuple

    def __post_init__(self):
        for v in self.alpha:
            if v not in (0, 1, FREE):
                raise ValueError(f"placement entries must be 0, 1 or FREE, got {v!r}")

    @classmethod
    def all_free(cls, L: int) -> "CachePlacement":
        return cls(alpha=(FREE,) * L)

    @classmethod
    def all_fixed(cls, L: int, value: int) -> "CachePlacement":
        return cls(alpha=(value,) * L)

    @classmethod
    def from_set(cls, L: int, cached: Iterable[int]) -> "CachePlacement":
        """Fully fixed placement caching exactly the 1-based indices in `cached`."""
        cached = set(cached)
        return cls(alpha=tuple(1 if ell in cached else 0 for ell in range(1, L + 1)))

    @property
    def L(self) -> int:
        return len(self.alpha)

    @property
    def L0(self) -> frozenset:
        return frozenset(i + 1 for i, v in enumerate(self.alpha) if v == 0)

    @property
    def L1(self) -> frozenset:
        return frozenset(i + 1 for i, v in enumerate(self.alpha) if v == 1)

    @property
    def free_indices(self) -> tuple:
        return tuple(i + 1 for i, v in enumerate(self.alpha) if v is FREE)

    @property
    def is_fully_fixed(self) -> bool:
        return all(v is not FREE for v in self.alpha)

    def with_fixed(self, ell: int, value: int) -> "CachePlacement":
        if self.alpha[ell - 1] is not FREE:
            raise ValueError(f"task {ell} is already fixed")
        a = list(self.alpha)
        a[ell - 1] = value
        return CachePlacement(alpha=tuple(a))

    def with_all_free_fixed(self, value: int) -> "CachePlacement":
        return CachePlacement(
            alpha=tuple(value if v is FREE else v for v in self.alpha)
        )

    def cached_bits(self, D: np.ndarray) -> float:
        """Total input bits of the tasks fixed to 1."""
        return float(sum(D[ell - 1] for ell in self.L1))

    def bitmap(self) -> str:
        return "".join("?" if v is FREE else str(v) for v in self.alpha)


@dataclass(frozen=True)
class Schedule:
    """All continuous decision variables of one block [bits].

    Structural zeros are materialized as literal zeros: the Phase-I
    offload at slot N_p, the Phase-I MEC execution at slot 1, the
    Phase-II offload at slot N and the Phase-II MEC execution at slot 1
    are not decision variables.
    """

    d_off_p1: np.ndarray      # shape (N_p,), entry N_p is 0
    d_mec_p1: np.ndarray      # shape (N_p,), entry 1 is 0
    d_loc: np.ndarray         # shape (K, N)
    d_off: np.ndarray         # shape (K, N), column N is 0
    d_mec: np.ndarray         # shape (N,), entry 1 is 0

    def __post_init__(self):
        for name in ("d_off_p1", "d_mec_p1", "d_loc", "d_off", "d_mec"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @classmethod
    def zeros(cls, params: SystemParams) -> "Schedule":
        return cls(
            d_off_p1=np.zeros(params.N_p),
            d_mec_p1=np.zeros(params.N_p),
            d_loc=np.zeros((params.K, params.N)),
            d_off=np.zeros((params.K, params.N)),
            d_mec=np.zeros(params.N),
        )

    def structural_zero_violations(self) -> list:
        bad = []
        if self.d_off_p1[-1] != 0.0:
            bad.append("d_off_p1[N_p] must be 0")
        if self.d_mec_p1[0] != 0.0:
            bad.append("d_mec_p1[1] must be 0")
        if np.any(self.d_off[:, -1] != 0.0):
            bad.append("d_off[:, N] must be 0")
        if self.d_mec[0] != 0.0:
            bad.append("d_mec[1] must be 0")
        return bad


@dataclass
class SolveReport:
    """Uniform result record returned by every scheme."""

    objective: float          # weighted-sum energy [J]
    breakdown: "EnergyBreakdown"
    placement: CachePlacement
    schedule: Schedule
    kkt_residual: float
    bnb_gap: float            # certified global gap [J]; 0 for pure convex solves
    node_count: int
    runtime: float            # wall-clock [s]
    repaired: bool = False    # True when a rounded placement needed capacity repair


@dataclass
class ValidationResult:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _check(cond: bool, violations: list, path: str, msg: str):
    if not cond:
        violations.append(f"{path}: {msg}")


def validate_scenario(s: Scenario) -> ValidationResult:
    """Check every type invariant; violations are reported, not raised."""
    v: list = []
    p = s.params

    _check(p.K >= 1, v, "params.K", f"expected K >= 1, got {p.K}")
    _check(p.L >= 1, v, "params.L", f"expected L >= 1, got {p.L}")
    _check(p.N_p >= 1, v, "params.N_p", f"expected N_p >= 1, got {p.N_p}")
    _check(p.N >= 1, v, "params.N", f"expected N >= 1, got {p.N}")
    _check(p.N_p < p.N, v, "params.N_p", f"expected N_p < N, got N_p={p.N_p}, N={p.N}")
    _check(p.tau > 0, v, "params.tau", f"expected tau > 0, got {p.tau}")
    _check(p.w0 >= 0, v, "params.w0", f"expected w0 >= 0, got {p.w0}")
    _check(p.w1 >= 0, v, "params.w1", f"expected w1 >= 0, got {p.w1}")
    _check(
        abs(p.w0 + p.w1 - 1.0) <= 1e-12,
        v, "params.w0", f"expected w0+w1=1, got {p.w0}+{p.w1}={p.w0 + p.w1}",
    )
    _check(p.sigma2 > 0, v, "params.sigma2", f"expected sigma2 > 0, got {p.sigma2}")
    _check(p.zeta0 > 0, v, "params.zeta0", f"expected zeta0 > 0, got {p.zeta0}")
    _check(p.C0 > 0, v, "params.C0", f"expected C0 > 0, got {p.C0}")

    _check(p.zeta_k.shape == (p.K,), v, "params.zeta_k", f"expected shape ({p.K},)")
    _check(p.C_k.shape == (p.K,), v, "params.C_k", f"expected shape ({p.K},)")
    _check(p.B_phase1.shape == (p.N_p,), v, "params.B_phase1", f"expected shape ({p.N_p},)")
    _check(p.B.shape == (p.K, p.N), v, "params.B", f"expected shape ({p.K}, {p.N})")
    if p.zeta_k.shape == (p.K,):
        _check(np.all(p.zeta_k > 0), v, "params.zeta_k", "all entries must be > 0")
    if p.C_k.shape == (p.K,):
        _check(np.all(p.C_k > 0), v, "params.C_k", "all entries must be > 0")
    if p.B_phase1.shape == (p.N_p,):
        _check(np.all(p.B_phase1 > 0), v, "params.B_phase1", "all entries must be > 0")
    if p.B.shape == (p.K, p.N):
        _check(np.all(p.B > 0), v, "params.B", "all entries must be > 0")

    lib = s.library
    _check(lib.D.shape == (p.L,), v, "library.D", f"expected shape ({p.L},)")
    if lib.D.shape == (p.L,):
        _check(np.all(lib.D > 0), v, "library.D", "all task sizes must be > 0")
    _check(lib.Dmax >= 0, v, "library.Dmax", f"expected Dmax >= 0, got {lib.Dmax}")

    ch = s.channels
    _check(ch.h2_phase1.shape == (p.N_p,), v, "channels.h2_phase1",
           f"expected shape ({p.N_p},)")
    if ch.h2_phase1.shape == (p.N_p,):
        _check(np.all(ch.h2_phase1 > 0), v, "channels.h2_phase1",
               "all gains must be > 0")
    _check(ch.h2.shape == (p.K, p.N), v, "channels.h2",
           f"expected shape ({p.K}, {p.N})")
    if ch.h2.shape == (p.K, p.N):
        _check(np.all(ch.h2 > 0), v, "channels.h2", "all gains must be > 0")

    arr = s.arrivals
    _check(arr.s.shape == (p.K, p.N), v, "arrivals.s",
           f"expected shape ({p.K}, {p.N})")
    if arr.s.shape == (p.K, p.N):
        _check(
            bool(np.all((arr.s >= 1) & (arr.s <= p.L))),
            v, "arrivals.s", f"task indices must lie in 1..{p.L}",
        )

    _check(1 <= s.k_o <= p.K, v, "k_o", f"expected k_o in 1..{p.K}, got {s.k_o}")

    return ValidationResult(ok=not v, violations=v)


def select_offload_wd(distances: Sequence[float]) -> int:
    """Pick the WD with the smallest AP distance (= smallest pathloss).

    Ties break toward the lowest index.  Returns a 1-based WD index.
    """
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise ValueError("select_offload_wd needs at least one distance")
    if np.any(d <= 0):
        raise ValueError("distances must be strictly positive")
    return int(np.argmin(d)) + 1


def build_cts(seq: Sequence[int], n: int) -> frozenset:
    """Causality task set: distinct tasks arrived during slots 1..n."""
    if not 1 <= n <= len(seq):
        raise ValueError(f"slot n={n} out of range 1..{len(seq)}")
    return frozenset(int(t) for t in seq[:n])


def first_arrival_slots(seq: Sequence[int]) -> dict:
    """Map task index -> first slot (1-based) it appears in `seq`."""
    first: dict = {}
    for i, t in enumerate(seq):
        t = int(t)
        if t not in first:
            first[t] = i + 1
    return first


def arrived_bits(s: Scenario, k: int, n: int, placement: CachePlacement) -> float:
    """Uncached input bits arrived at WD k up to slot n under a fixed placement."""
    if not placement.is_fully_fixed:
        raise ValueError("arrived_bits requires a fully fixed placement")
    cts = build_cts(s.arrivals.s[k - 1], n)
    D = s.library.D
    return float(
        sum((1 - placement.alpha[ell - 1]) * D[ell - 1] for ell in cts)
    )
