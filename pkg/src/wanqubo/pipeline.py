"""Configuration and end-to-end assembly: topology -> demands -> catalog -> ILP -> QUBO."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .ilp import IlpConfig, IlpInstance, assemble
from .pathgen import DEFAULT_K, DEFAULT_MAX_PATTERNS, DEFAULT_REACH_KM, PathCatalog, build_catalog
from .qubo import QuboProblem, build_qubo
from .sampler import (
    DEFAULT_BETA_RANGE,
    DEFAULT_BIT_BUDGET,
    DEFAULT_SWEEPS,
    SampleSet,
    parse_schedule,
    sample_random,
    sample_sa,
    solve_exhaustive,
)
from .topology import Topology, build_growing_topology, load_topology
from .traffic import CIRCUIT_RATE_GBPS, DemandSet, sample_demands

SAMPLER_METHODS = ("sa", "random", "exhaustive")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    n_nodes: int = 3
    topology_file: str | None = None
    mu: float = 75.0
    sigma: float = 10.0
    demand_seed: int = 42
    max_demands: int | None = None
    k: int = DEFAULT_K
    max_patterns: int | None = DEFAULT_MAX_PATTERNS
    reach_km: float = DEFAULT_REACH_KM
    xi: float = CIRCUIT_RATE_GBPS
    a: int = 1
    eta_max: int | None = None
    omega_max: int | None = None
    penalty: float = 4.0
    method: str = "sa"
    n_samples: int = 1000
    sweeps: int = DEFAULT_SWEEPS
    beta_min: float = DEFAULT_BETA_RANGE[0]
    beta_max: float = DEFAULT_BETA_RANGE[1]
    schedule: str = "100"
    sampler_seed: int = 0
    bit_budget: int = DEFAULT_BIT_BUDGET
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.method not in SAMPLER_METHODS:
            raise ConfigError(f"method must be one of {SAMPLER_METHODS}, got {self.method!r}")
        if self.n_samples < 1 or self.sweeps < 1:
            raise ConfigError("n_samples and sweeps must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_demands is not None and self.max_demands < 1:
            raise ConfigError("max_demands must be >= 1")
        try:
            parse_schedule(self.schedule)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> PipelineConfig:
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class Bundle:
    topology: Topology
    demands: DemandSet
    catalog: PathCatalog
    instance: IlpInstance
    qubo: QuboProblem


def build_topology(cfg: PipelineConfig) -> Topology:
    if cfg.topology_file:
        return load_topology(cfg.topology_file)
    return build_growing_topology(cfg.n_nodes)


def build_demands(cfg: PipelineConfig, topology: Topology) -> DemandSet:
    ds = sample_demands(topology, cfg.mu, cfg.sigma, cfg.demand_seed)
    return ds.subset(cfg.max_demands) if cfg.max_demands else ds


def ilp_config(cfg: PipelineConfig, n_nodes: int, a: int | None = None, penalty: float | None = None) -> IlpConfig:
    return IlpConfig.for_network(
        n_nodes,
        xi=cfg.xi,
        a=cfg.a if a is None else a,
        eta_max=cfg.eta_max,
        omega_max=cfg.omega_max,
        penalty=cfg.penalty if penalty is None else penalty,
    )


def build_bundle(cfg: PipelineConfig, a: int | None = None, penalty: float | None = None) -> Bundle:
    topo = build_topology(cfg)
    demands = build_demands(cfg, topo)
    catalog = build_catalog(topo, demands, cfg.k, cfg.max_patterns, cfg.reach_km)
    inst = assemble(catalog, demands, ilp_config(cfg, len(topo), a, penalty))
    return Bundle(topo, demands, catalog, inst, build_qubo(inst))


def run_sampler(qp: QuboProblem, cfg: PipelineConfig, seed: int | None = None) -> SampleSet:
    seed = cfg.sampler_seed if seed is None else seed
    schedule = parse_schedule(cfg.schedule)
    if cfg.method == "sa":
        return sample_sa(qp, cfg.n_samples, cfg.sweeps, (cfg.beta_min, cfg.beta_max), seed, schedule)
    if cfg.method == "random":
        ss = sample_random(qp, cfg.n_samples, seed)
        ss.schedule = schedule
        return ss
    best = solve_exhaustive(qp, cfg.bit_budget)
    return SampleSet.from_bits([best.bits], [best.energy], "exhaustive", schedule=schedule)


def measure_scaling(cfg: PipelineConfig, sizes, accuracies) -> list[tuple[int, int, int, int]]:
    """``(|V|, a, N, couplings)`` of the growing-network QUBO for each size and accuracy."""
    out = []
    for n in sizes:
        sized = cfg.replace(n_nodes=n, topology_file=None)
        topo = build_topology(sized)
        demands = build_demands(sized, topo)
        catalog = build_catalog(topo, demands, cfg.k, cfg.max_patterns, cfg.reach_km)
        for a in accuracies:
            inst = assemble(catalog, demands, ilp_config(sized, n, a))
            qp = build_qubo(inst)
            out.append((n, a, qp.N, qp.n_couplings))
    return out
