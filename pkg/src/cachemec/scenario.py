"""Deterministic scenario generation and scenario file I/O.

Randomness contract: every random quantity is drawn from its own PCG64
substream keyed by ``SeedSequence((seed, purpose, a, b))``, so the draw
for cell (k, n) never depends on the array shape, iteration order or
worker layout.  Growing N leaves all draws at earlier cells unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace

import numpy as np

from .model import (
    ArrivalSequences,
    ChannelSet,
    Scenario,
    SystemParams,
    TaskLibrary,
    select_offload_wd,
    validate_scenario,
)

SCHEMA_VERSION = "scenario/v1"

# substream purpose tags (stable; never renumber)
_P_LIBRARY = 1
_P_ARRIVAL = 2
_P_CHAN_P1 = 3
_P_CHAN_P2 = 4
_P_BULK = 5


class ScenarioFormatError(ValueError):
    """Raised for scenario files with a wrong schema or broken invariants."""


@dataclass(frozen=True)
class GenConfig:
    """Generator knobs; defaults follow the reference simulation setup.

    Sizes and capacities are bits, bandwidths Hz (the CLI accepts
    Kbits/MHz and converts at the boundary).
    """

    seed: int
    K: int = 20
    L: int = 40
    N_p: int = 5
    N: int = 30
    tau: float = 0.1
    w0: float = 0.1
    w1: float = 0.9
    sigma2: float = 1e-8
    zeta0: float = 1e-29
    C0: float = 1e3
    zeta_wd: float = 1e-28
    C_wd: float = 3e3
    bandwidth: float = 2e6            # Phase-II bandwidth per (k, n) [Hz]
    bandwidth_p1: float = 2e6         # Phase-I offload bandwidth [Hz]
    rician_factor: float = 3.0        # LoS/scatter power ratio
    omega0: float = 10 ** -3.2        # pathloss at 1 m (-32 dB)
    pathloss_exp: float = 3.0
    zipf_shape: float = 0.5
    size_min: float = 1e3             # task size lower bound [bits]
    size_max: float = 5e3             # task size upper bound [bits]
    dmax: float = 4e4                 # cache capacity [bits]
    dist_min: float = 500.0           # nearest WD distance [m]
    dist_max: float = 1000.0          # farthest WD distance [m]

    def validate(self):
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be >= 0")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be > 0")
        if not 0 < self.size_min <= self.size_max:
            raise ValueError("size range must satisfy 0 < min <= max")
        if self.zipf_shape < 0:
            raise ValueError("zipf_shape must be >= 0")
        if self.dist_min <= 0 or self.dist_max < self.dist_min:
            raise ValueError("distances must satisfy 0 < dist_min <= dist_max")


def substream(seed: int, purpose: int, a: int = 0, b: int = 0) -> np.random.Generator:
    """Independent PCG64 stream for one (purpose, a, b) cell."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, purpose, a, b)))
    )


def wd_distances(cfg: GenConfig) -> np.ndarray:
    """Linear WD placement d_k = dist_min + (dist_max-dist_min)*(k-1)/(K-1)."""
    if cfg.K == 1:
        return np.array([cfg.dist_min])
    k = np.arange(cfg.K, dtype=float)
    return cfg.dist_min + (cfg.dist_max - cfg.dist_min) * k / (cfg.K - 1)


def rician_gains(rng: np.random.Generator, cfg: GenConfig, distance: float,
                 count: int) -> np.ndarray:
    """|h|^2 samples of the Rician channel at one distance.

    h = sqrt(X_R*g/(1+X_R)) * h0 + sqrt(g/(1+X_R)) * z with h0 = 1,
    z ~ CN(0,1) and mean power g = omega0 * d^(-alpha).
    """
    g = cfg.omega0 * distance ** (-cfg.pathloss_exp)
    xr = cfg.rician_factor
    los = np.sqrt(xr * g / (1.0 + xr))
    scat = np.sqrt(g / (1.0 + xr))
    re = rng.standard_normal(count) * np.sqrt(0.5)
    im = rng.standard_normal(count) * np.sqrt(0.5)
    return (los + scat * re) ** 2 + (scat * im) ** 2


def rician_gain_samples(cfg: GenConfig, distance: float, count: int) -> np.ndarray:
    """Bulk Monte-Carlo draw from a dedicated substream (statistics checks)."""
    return rician_gains(substream(cfg.seed, _P_BULK), cfg, distance, count)


def gen_channels(cfg: GenConfig, distances: np.ndarray) -> ChannelSet:
    """Per-slot squared channel magnitudes for Phase I (WD k_o) and Phase II."""
    distances = np.asarray(distances, dtype=float)
    if np.any(distances <= 0):
        raise ValueError("distances must be strictly positive")
    k_o = select_offload_wd(distances)
    h2_p1 = np.empty(cfg.N_p)
    for i in range(1, cfg.N_p + 1):
        rng = substream(cfg.seed, _P_CHAN_P1, i)
        h2_p1[i - 1] = rician_gains(rng, cfg, distances[k_o - 1], 1)[0]
    h2 = np.empty((cfg.K, cfg.N))
    for k in range(1, cfg.K + 1):
        for n in range(1, cfg.N + 1):
            rng = substream(cfg.seed, _P_CHAN_P2, k, n)
            h2[k - 1, n - 1] = rician_gains(rng, cfg, distances[k - 1], 1)[0]
    return ChannelSet(h2_phase1=h2_p1, h2=h2)


def zipf_pmf(L: int, shape: float) -> np.ndarray:
    """P(rank r) = r^(-shape) / sum_j j^(-shape), r = 1..L."""
    ranks = np.arange(1, L + 1, dtype=float)
    w = ranks ** (-shape)
    return w / w.sum()


def gen_arrivals(cfg: GenConfig) -> ArrivalSequences:
    """i.i.d. Zipf-popularity task indices per (k, n) substream."""
    if cfg.L < 1:
        raise ValueError("need at least one task")
    cdf = np.cumsum(zipf_pmf(cfg.L, cfg.zipf_shape))
    s = np.empty((cfg.K, cfg.N), dtype=np.int64)
    for k in range(1, cfg.K + 1):
        for n in range(1, cfg.N + 1):
            u = substream(cfg.seed, _P_ARRIVAL, k, n).random()
            s[k - 1, n - 1] = int(np.searchsorted(cdf, u, side="right")) + 1
    return ArrivalSequences(s=s)


def gen_library(cfg: GenConfig) -> TaskLibrary:
    """Task sizes D_ell ~ U(size_min, size_max), capacity copied from config."""
    D = np.empty(cfg.L)
    for ell in range(1, cfg.L + 1):
        D[ell - 1] = substream(cfg.seed, _P_LIBRARY, ell).uniform(
            cfg.size_min, cfg.size_max
        )
    return TaskLibrary(D=D, Dmax=float(cfg.dmax))


def gen_scenario(cfg: GenConfig) -> Scenario:
    """Full instance: distances -> k_o -> library, arrivals, channels."""
    cfg.validate()
    distances = wd_distances(cfg)
    k_o = select_offload_wd(distances)
    params = SystemParams(
        K=cfg.K, L=cfg.L, N_p=cfg.N_p, N=cfg.N, tau=cfg.tau,
        w0=cfg.w0, w1=cfg.w1, sigma2=cfg.sigma2,
        zeta0=cfg.zeta0, C0=cfg.C0,
        zeta_k=np.full(cfg.K, cfg.zeta_wd),
        C_k=np.full(cfg.K, cfg.C_wd),
        B_phase1=np.full(cfg.N_p, cfg.bandwidth_p1),
        B=np.full((cfg.K, cfg.N), cfg.bandwidth),
    )
    scen = Scenario(
        params=params,
        library=gen_library(cfg),
        channels=gen_channels(cfg, distances),
        arrivals=gen_arrivals(cfg),
        k_o=k_o,
    )
    result = validate_scenario(scen)
    if not result.ok:
        raise ValueError(f"generated scenario violates invariants: {result.violations}")
    return scen


def _params_to_dict(p: SystemParams) -> dict:
    return {
        "K": p.K, "L": p.L, "N_p": p.N_p, "N": p.N, "tau": p.tau,
        "w0": p.w0, "w1": p.w1, "sigma2": p.sigma2,
        "zeta0": p.zeta0, "C0": p.C0,
        "zeta_k": p.zeta_k.tolist(), "C_k": p.C_k.tolist(),
        "B_phase1": p.B_phase1.tolist(), "B": p.B.tolist(),
    }


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "units": {
            "task_size": "bits", "cache_capacity": "bits", "tau": "s",
            "bandwidth": "Hz", "sigma2": "W", "channel_gain": "dimensionless",
        },
        "params": _params_to_dict(s.params),
        "library": {"D": s.library.D.tolist(), "Dmax": s.library.Dmax},
        "channels": {
            "h2_phase1": s.channels.h2_phase1.tolist(),
            "h2": s.channels.h2.tolist(),
        },
        "arrivals": {"s": s.arrivals.s.tolist()},
        "k_o": s.k_o,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise ScenarioFormatError(
            f"unsupported scenario schema {schema!r}, expected {SCHEMA_VERSION!r}"
        )
    try:
        p = doc["params"]
        params = SystemParams(
            K=int(p["K"]), L=int(p["L"]), N_p=int(p["N_p"]), N=int(p["N"]),
            tau=float(p["tau"]), w0=float(p["w0"]), w1=float(p["w1"]),
            sigma2=float(p["sigma2"]), zeta0=float(p["zeta0"]), C0=float(p["C0"]),
            zeta_k=np.array(p["zeta_k"], dtype=float),
            C_k=np.array(p["C_k"], dtype=float),
            B_phase1=np.array(p["B_phase1"], dtype=float),
            B=np.array(p["B"], dtype=float),
        )
        scen = Scenario(
            params=params,
            library=TaskLibrary(
                D=np.array(doc["library"]["D"], dtype=float),
                Dmax=float(doc["library"]["Dmax"]),
            ),
            channels=ChannelSet(
                h2_phase1=np.array(doc["channels"]["h2_phase1"], dtype=float),
                h2=np.array(doc["channels"]["h2"], dtype=float),
            ),
            arrivals=ArrivalSequences(s=np.array(doc["arrivals"]["s"], dtype=np.int64)),
            k_o=int(doc["k_o"]),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioFormatError(f"malformed scenario document: {exc}") from exc
    result = validate_scenario(scen)
    if not result.ok:
        raise ScenarioFormatError(
            "scenario violates invariants: " + "; ".join(result.violations)
        )
    return scen


def save_scenario(s: Scenario, path):
    """Write a scenario/v1 JSON document (full float precision)."""
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def config_to_dict(cfg: GenConfig) -> dict:
    return asdict(cfg)


def config_from_dict(doc: dict, **overrides) -> GenConfig:
    cfg = GenConfig(**{**doc, **overrides})
    cfg.validate()
    return cfg


def config_with(cfg: GenConfig, **kwargs) -> GenConfig:
    return replace(cfg, **kwargs)
