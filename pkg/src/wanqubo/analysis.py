"""Post-processing of samples and hardware-scaling estimates."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .ilp import Feasibility, IlpInstance, NetworkSolution, check_feasible
from .qubo import QuboProblem
from .sampler import Sample, SampleSet

DEFAULT_BINS = 100
DEFAULT_CHAIN_COEFF = 2.13

# Published power laws for the growing network; which series each describes is not stated.
REFERENCE_FITS = ((0.25, 3.29), (1 / 7, 3.35))

# Per-sample run time model (ms): intercept + slope * effective anneal time (ms).
TTS_INTERCEPT_MS = 0.58
TTS_SLOPE = 5.75


@dataclass(frozen=True)
class DecodedSample:
    sample: Sample
    g: np.ndarray
    omega: np.ndarray
    s: np.ndarray
    cost: int
    feasibility: Feasibility

    @property
    def feasible(self) -> bool:
        return self.feasibility.feasible

    @property
    def violations(self):
        return self.feasibility.violations

    @property
    def energy(self) -> float:
        return self.sample.energy


@dataclass
class DecodedBatch:
    """Column-wise decoding of a whole sample set."""

    energies: np.ndarray
    costs: np.ndarray
    feasible: np.ndarray
    tags: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.energies)


def _check_dims(qp: QuboProblem, inst: IlpInstance, n_bits: int):
    enc = qp.encoding
    if enc is None:
        raise ValueError("QUBO carries no bit encoding; compile it from the ILP instance")
    if enc.Z_x.shape[0] != inst.M or enc.Z_s.shape[0] != inst.K:
        raise ValueError("QUBO encoding does not match the ILP instance")
    if n_bits != qp.N:
        raise ValueError(f"samples have {n_bits} bits, QUBO has {qp.N}")
    return enc


def decode(qp: QuboProblem, inst: IlpInstance, samples: SampleSet | Iterable[Sample]) -> list[DecodedSample]:
    """Map each sample back to ``(g, omega, s)`` and classify its feasibility."""
    out = []
    for smp in samples:
        enc = _check_dims(qp, inst, len(smp.bits))
        x = np.rint(enc.decode_x(smp.bits)).astype(np.int64)
        s = enc.decode_s(smp.bits)
        sol = NetworkSolution(x[: inst.n_patterns], x[inst.n_patterns :])
        out.append(DecodedSample(smp, sol.g, sol.omega, s, sol.cost, check_feasible(inst, sol)))
    return out


def decode_batch(qp: QuboProblem, inst: IlpInstance, ss: SampleSet, chunk: int = 1 << 15) -> DecodedBatch:
    """Vectorised cost and feasibility of every sample; same rules as ``check_feasible``."""
    enc = _check_dims(qp, inst, ss.n_bits)
    scale = inst.scale
    costs = np.empty(len(ss), dtype=np.int64)
    feas = np.empty(len(ss), dtype=bool)
    G = inst.G.astype(np.int64)
    Ht = inst.H_num.T.tocsr()
    phit = inst.catalog.phi.T.tocsr()
    for start in range(0, len(ss), chunk):
        bits = np.unpackbits(ss.packed[start : start + chunk], axis=1, count=ss.n_bits)
        x = np.rint(enc.decode_x(bits)).astype(np.int64)
        g, omega = x[:, : inst.n_patterns], x[:, inst.n_patterns :]
        ok = np.all(np.asarray((G @ g.T).T) == 1, axis=1)
        ok &= np.all(np.asarray(g @ Ht) - scale * omega <= 0, axis=1)
        ok &= np.all(np.asarray(omega @ phit) - inst.eta <= 0, axis=1)
        costs[start : start + len(x)] = omega.sum(axis=1)
        feas[start : start + len(x)] = ok
    return DecodedBatch(ss.energies.copy(), costs, feas)


def concat_batches(batches: Sequence[DecodedBatch]) -> DecodedBatch:
    return DecodedBatch(
        np.concatenate([b.energies for b in batches]),
        np.concatenate([b.costs for b in batches]),
        np.concatenate([b.feasible for b in batches]),
        [t for b in batches for t in b.tags],
    )


@dataclass
class RunStatistics:
    """Aggregates of one group of samples.

    Densities divide by ``denominator``, which is the group's own sample
    count unless the group is part of a larger collection that is
    normalised jointly.
    """

    key: Hashable
    total: int
    feasible: int
    denominator: int
    cost_counts: dict[int, int]
    energy_counts: np.ndarray
    energy_edges: np.ndarray
    min_energy: float
    mean_energy: float

    @property
    def feasible_per_million(self) -> float:
        return self.feasible / self.denominator * 1e6 if self.denominator else 0.0

    @property
    def cost_per_million(self) -> dict[int, float]:
        return {c: n / self.denominator * 1e6 for c, n in sorted(self.cost_counts.items())}

    @property
    def energy_density(self) -> np.ndarray:
        return self.energy_counts / self.total if self.total else self.energy_counts.astype(float)

    @property
    def best_feasible_cost(self) -> int | None:
        return min(self.cost_counts) if self.cost_counts else None


def _as_arrays(decoded) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(decoded, DecodedBatch):
        return decoded.energies, decoded.costs, decoded.feasible
    decoded = list(decoded)
    return (
        np.array([d.energy for d in decoded], dtype=float),
        np.array([d.cost for d in decoded], dtype=np.int64),
        np.array([d.feasible for d in decoded], dtype=bool),
    )


def summarize(
    decoded,
    key: Hashable = None,
    bins: int = DEFAULT_BINS,
    energy_range: tuple[float, float] | None = None,
    denominator: int | None = None,
) -> RunStatistics:
    energies, costs, feasible = _as_arrays(decoded)
    if len(energies) == 0:
        raise ValueError("cannot summarize an empty sample collection")
    counts, edges = np.histogram(energies, bins=bins, range=energy_range)
    cost_counts = Counter(int(c) for c in costs[feasible])
    return RunStatistics(
        key=key,
        total=len(energies),
        feasible=int(feasible.sum()),
        denominator=len(energies) if denominator is None else denominator,
        cost_counts=dict(sorted(cost_counts.items())),
        energy_counts=counts,
        energy_edges=edges,
        min_energy=float(energies.min()),
        mean_energy=float(energies.mean()),
    )


def summarize_groups(
    batch: DecodedBatch,
    key: Callable[[dict], Hashable],
    bins: int = DEFAULT_BINS,
    normalize_jointly: bool = False,
) -> dict[Hashable, RunStatistics]:
    """One ``RunStatistics`` per group of ``key(tag)``.

    With ``normalize_jointly`` every group's densities are divided by the
    size of the whole batch, so the per-cost bars of all groups add up to
    the overall feasible rate.
    """
    if len(batch) == 0:
        raise ValueError("cannot summarize an empty sample collection")
    if len(batch.tags) != len(batch):
        raise ValueError("every sample needs a tag dict for grouping")
    groups: dict[Hashable, list[int]] = defaultdict(list)
    for i, tag in enumerate(batch.tags):
        groups[key(tag)].append(i)
    rng = (float(batch.energies.min()), float(batch.energies.max()))
    if rng[0] == rng[1]:
        rng = (rng[0] - 0.5, rng[1] + 0.5)
    out = {}
    for k in sorted(groups, key=repr):
        idx = np.array(groups[k])
        sub = DecodedBatch(batch.energies[idx], batch.costs[idx], batch.feasible[idx])
        out[k] = summarize(sub, k, bins, rng, len(batch) if normalize_jointly else None)
    return out


@dataclass(frozen=True)
class TimeToSolution:
    t_eff_ms: float
    per_sample_ms: float
    total_s: float


def time_to_solution(t_ps_us: float, t_p_us: float = 0.0, n_samples: int = 1) -> TimeToSolution:
    """Wall-clock estimate for ``n_samples`` anneals of ``t_ps + t_p`` µs each."""
    if t_ps_us < 0 or t_p_us < 0 or n_samples < 0:
        raise ValueError("times and sample count must be non-negative")
    t_eff_ms = (t_ps_us + t_p_us) / 1000.0
    per_sample = TTS_INTERCEPT_MS + TTS_SLOPE * t_eff_ms
    return TimeToSolution(t_eff_ms, per_sample, n_samples * per_sample / 1000.0)


@dataclass(frozen=True)
class HardwareProfile:
    physical_qubits: int = 5600
    couplers: int = 40100
    name: str = "default"

    def __post_init__(self):
        if self.physical_qubits <= 0 or self.couplers <= 0:
            raise ValueError("hardware limits must be positive")


def chain_length(n_nodes: int, coeff: float = DEFAULT_CHAIN_COEFF) -> float:
    return coeff * n_nodes


def physical_qubits(n_logical: int, chain: float) -> int:
    return int(round(n_logical * chain))


@dataclass(frozen=True)
class ScalingRow:
    n_nodes: int
    a: int
    logical_qubits: int
    couplings: int
    chain_length: float
    physical_qubits: int
    logical_util_pct: float
    coupler_util_pct: float
    physical_util_pct: float
    embeddable: bool


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    profile: HardwareProfile
    chain_coeff: float
    # (quantity, a) -> (coefficient, exponent) of coefficient * |V|**exponent
    fits: dict[tuple[str, int], tuple[float, float]]

    CSV_COLUMNS = (
        "n_nodes", "a", "logical_qubits", "couplings", "chain_length", "physical_qubits",
        "logical_util_pct", "coupler_util_pct", "physical_util_pct", "embeddable",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.n_nodes, r.a, r.logical_qubits, r.couplings, f"{r.chain_length:.4f}",
                r.physical_qubits, f"{r.logical_util_pct:.4f}", f"{r.coupler_util_pct:.4f}",
                f"{r.physical_util_pct:.4f}", int(r.embeddable),
            ])
        return buf.getvalue()

    def text(self) -> str:
        p = self.profile
        lines = [
            f"hardware profile: {p.name} ({p.physical_qubits} qubits, {p.couplers} couplers)",
            f"chain model: {self.chain_coeff} * |V|",
        ]
        for r in self.rows:
            lines.append(
                f"|V|={r.n_nodes:2d} a={r.a}: N={r.logical_qubits:5d} ({r.logical_util_pct:6.2f}%) "
                f"couplings={r.couplings:6d} ({r.coupler_util_pct:6.2f}%) "
                f"physical~{r.physical_qubits:6d} ({r.physical_util_pct:7.2f}%) "
                f"{'embeddable' if r.embeddable else 'exceeds hardware'}"
            )
        for (qty, a), (coef, exp) in sorted(self.fits.items()):
            lines.append(f"fit {qty} (a={a}): {coef:.4g} * |V|^{exp:.3f}")
        if self.fits:
            ref = ", ".join(f"{c:.4g} * |V|^{e}" for c, e in REFERENCE_FITS)
            lines.append(f"reference power laws (series unlabelled): {ref}")
        lines.append(f"utilisation is relative to {p.physical_qubits} qubits and {p.couplers} couplers")
        return "\n".join(lines)


def fit_power_law(sizes: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``log(values) = log(coef) + exp * log(sizes)``."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(sizes)) < 2:
        raise ValueError("need at least two distinct sizes to fit a power law")
    exp, log_coef = np.polyfit(np.log(sizes), np.log(values), 1)
    return float(math.exp(log_coef)), float(exp)


def scaling_report(
    stats: Iterable[Sequence],
    profile: HardwareProfile | None = None,
    chain_coeff: float = DEFAULT_CHAIN_COEFF,
    fit: bool = True,
) -> ScalingReport:
    """Hardware utilisation per network size.

    ``stats`` holds ``(n_nodes, a, logical_qubits, couplings)`` tuples; an
    optional fifth entry overrides the chain-length model for that row.
    """
    if not chain_coeff > 0:
        raise ValueError("chain coefficient must be positive")
    profile = profile or HardwareProfile()
    rows = []
    for item in stats:
        n_nodes, a, n_logical, nnz = (int(v) for v in item[:4])
        chain = float(item[4]) if len(item) > 4 else chain_length(n_nodes, chain_coeff)
        phys = physical_qubits(n_logical, chain)
        rows.append(ScalingRow(
            n_nodes, a, n_logical, nnz, chain, phys,
            100.0 * n_logical / profile.physical_qubits,
            100.0 * nnz / profile.couplers,
            100.0 * phys / profile.physical_qubits,
            phys <= profile.physical_qubits and nnz <= profile.couplers,
        ))
    rows.sort(key=lambda r: (r.a, r.n_nodes))
    fits = {}
    if fit:
        by_a = defaultdict(list)
        for r in rows:
            by_a[r.a].append(r)
        for a, rs in by_a.items():
            sizes = [r.n_nodes for r in rs]
            fits[("logical_qubits", a)] = fit_power_law(sizes, [r.logical_qubits for r in rs])
            fits[("couplings", a)] = fit_power_law(sizes, [r.couplings for r in rs])
            fits[("physical_qubits", a)] = fit_power_law(sizes, [r.physical_qubits for r in rs])
    return ScalingReport(rows, profile, chain_coeff, fits)


RUN_CSV_COLUMNS = (
    "group", "total", "feasible", "feasible_per_million", "best_feasible_cost",
    "min_energy", "mean_energy", "cost_counts",
)


def run_stats_csv(stats: dict[Hashable, RunStatistics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_CSV_COLUMNS)
    for key, st in stats.items():
        w.writerow([
            _group_label(key), st.total, st.feasible, f"{st.feasible_per_million:.3f}",
            "" if st.best_feasible_cost is None else st.best_feasible_cost,
            repr(st.min_energy), repr(st.mean_energy),
            ";".join(f"{c}:{n}" for c, n in st.cost_counts.items()),
        ])
    return buf.getvalue()


def _group_label(key) -> str:
    if isinstance(key, tuple):
        return "|".join(str(k) for k in key)
    return str(key)
