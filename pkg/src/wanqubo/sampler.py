"""Samplers for QUBO problems.

``solve_exhaustive`` is the desk-scale exact reference, ``sample_random``
the uniform-guessing baseline and ``sample_sa`` a single-bit-flip
Metropolis annealer that stands in for annealing hardware. Annealing
schedules are parsed and carried along with the samples but do not
influence the classical dynamics.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numba
import numpy as np
from scipy import sparse

from .qubo import QuboProblem

DEFAULT_BIT_BUDGET = 26
DEFAULT_SWEEPS = 1000
DEFAULT_BETA_RANGE = (0.1, 10.0)

_NUM = r"(\d+(?:\.\d*)?|\.\d+)"
_SCHEDULE_RE = re.compile(rf"^\s*{_NUM}\s*(?:@\s*{_NUM}\s*\+\s*{_NUM})?\s*$")


class BudgetExceededError(ValueError):
    pass


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class ScheduleSpec:
    """Annealing schedule ``t_ps[@s_p+t_p]``: anneal time per sample, pause point, pause length (µs)."""

    t_ps: float
    s_p: float | None = None
    t_p: float = 0.0

    def __post_init__(self):
        if self.t_ps < 0 or self.t_p < 0:
            raise ValueError("schedule times must be non-negative")
        if self.s_p is not None and not 0.0 <= self.s_p <= 1.0:
            raise ValueError(f"pause fraction must lie in [0, 1], got {self.s_p}")
        if self.s_p is None and self.t_p != 0:
            raise ValueError("a pause duration needs a pause fraction")

    @property
    def t_eff_us(self) -> float:
        return self.t_ps + self.t_p

    def render(self) -> str:
        if self.s_p is None:
            return _fmt_num(self.t_ps)
        return f"{_fmt_num(self.t_ps)}@{_fmt_num(self.s_p)}+{_fmt_num(self.t_p)}"

    def __str__(self) -> str:
        return self.render()


def parse_schedule(text: str) -> ScheduleSpec:
    """Parse ``"100"`` or ``"100@0.35+20"``."""
    m = _SCHEDULE_RE.match(text)
    if m is None:
        raise ValueError(f"malformed annealing schedule {text!r}; expected 't' or 't@s+tp'")
    t_ps, s_p, t_p = m.groups()
    if s_p is None:
        return ScheduleSpec(float(t_ps))
    return ScheduleSpec(float(t_ps), float(s_p), float(t_p))


@dataclass(frozen=True)
class Sample:
    bits: np.ndarray
    energy: float
    source: str
    seed: int | None = None
    index: int = 0


@dataclass
class SampleSet:
    """Bit vectors (packed, 8 per byte) with their energies."""

    packed: np.ndarray
    n_bits: int
    energies: np.ndarray
    source: str
    seed: int | None = None
    schedule: ScheduleSpec | None = None
    wall_time_s: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_bits(cls, bits, energies, source, **kw) -> SampleSet:
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        return cls(np.packbits(bits, axis=1), bits.shape[1], np.asarray(energies, dtype=float), source, **kw)

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.n_bits)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> Sample:
        bits = np.unpackbits(self.packed[i], count=self.n_bits)
        return Sample(bits, float(self.energies[i]), self.source, self.seed, i)

    def best(self) -> Sample:
        return self[int(np.argmin(self.energies))]

    def records(self, **tags) -> Iterator[dict]:
        sched = self.schedule.render() if self.schedule is not None else None
        for i in range(len(self)):
            rec = {
                "bits": self.packed[i].tobytes().hex(),
                "n_bits": self.n_bits,
                "energy": float(self.energies[i]),
                "source": self.source,
                "seed": self.seed,
                "index": i,
                "schedule": sched,
            }
            rec.update(tags)
            yield rec


def bits_from_hex(text: str, n_bits: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8), count=n_bits)


def write_jsonl(ss: SampleSet, path: str | Path, append: bool = True, **tags) -> None:
    with open(path, "a" if append else "w") as fh:
        for rec in ss.records(**tags):
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def sample_set_from_records(records: list[dict]) -> SampleSet:
    if not records:
        raise ValueError("no records")
    n = records[0]["n_bits"]
    bits = np.array([bits_from_hex(r["bits"], n) for r in records], dtype=np.uint8)
    sched = records[0].get("schedule")
    return SampleSet.from_bits(
        bits,
        [r["energy"] for r in records],
        records[0]["source"],
        seed=records[0].get("seed"),
        schedule=parse_schedule(sched) if sched else None,
    )


def _index_bits(idx: np.ndarray, width: int) -> np.ndarray:
    """Rows of bits for integers ``idx``, most significant bit first."""
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(float)


def solve_exhaustive(qp: QuboProblem, bit_budget: int = DEFAULT_BIT_BUDGET, chunk_rows: int = 512) -> Sample:
    """Global minimum over all ``2**N`` bit vectors.

    The vector is split into a leading and trailing half; the energy of
    every (lead, trail) combination is ``E_lead + E_trail + 2 lead^T Q_lt trail``,
    evaluated block-wise with matrix products. Among (numerically) equal
    minima the lexicographically smallest bit vector wins.
    """
    n = qp.N
    if n > bit_budget:
        raise BudgetExceededError(f"N={n} exceeds the exhaustive bit budget of {bit_budget}")
    Q = qp.dense()
    n_lo = n // 2
    n_hi = n - n_lo
    Q_hh, Q_ll, Q_hl = Q[:n_hi, :n_hi], Q[n_hi:, n_hi:], Q[:n_hi, n_hi:]

    lo_bits = _index_bits(np.arange(2**n_lo, dtype=np.int64), n_lo)
    e_lo = np.einsum("ij,jk,ik->i", lo_bits, Q_ll, lo_bits)
    cross_lo = 2.0 * Q_hl @ lo_bits.T  # (n_hi, 2**n_lo)

    best_e, best_idx = np.inf, -1
    for start in range(0, 2**n_hi, chunk_rows):
        hi_idx = np.arange(start, min(start + chunk_rows, 2**n_hi), dtype=np.int64)
        hi_bits = _index_bits(hi_idx, n_hi)
        e_hi = np.einsum("ij,jk,ik->i", hi_bits, Q_hh, hi_bits)
        block = e_hi[:, None] + e_lo[None, :] + hi_bits @ cross_lo
        m = float(block.min())
        tol = 1e-9 * max(1.0, abs(m))
        if m < best_e - tol:
            flat = int(np.argmax(block.ravel() <= m + tol))
            best_e = m
            best_idx = (start + flat // block.shape[1]) * 2**n_lo + flat % block.shape[1]
    bits = _index_bits(np.array([best_idx]), n)[0].astype(np.uint8)
    return Sample(bits, qp.energy(bits), "exhaustive", None, best_idx)


def sample_random(qp: QuboProblem, n: int, seed: int | None = 0, chunk: int = 1 << 16) -> SampleSet:
    """``n`` uniformly random bit vectors with their energies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    packed, energies = [], []
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        bits = rng.integers(0, 2, size=(m, qp.N), dtype=np.uint8)
        energies.append(qp.energies(bits))
        packed.append(np.packbits(bits, axis=1))
    return SampleSet(
        np.concatenate(packed) if packed else np.zeros((0, 0), np.uint8),
        qp.N,
        np.concatenate(energies),
        "random",
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )


@numba.njit(cache=True)
def _anneal_chain(indptr, indices, data, diag, state, betas, uniforms):
    """Metropolis sweeps over all bits, in index order, for each beta.

    ``field[i]`` tracks ``sum_{j != i} Q_ij q_j`` so that a flip costs
    O(degree). Returns the energy change accumulated along the chain.
    """
    n = state.shape[0]
    field = np.zeros(n)
    for i in range(n):
        if state[i]:
            for k in range(indptr[i], indptr[i + 1]):
                field[indices[k]] += data[k]
    total = 0.0
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            sign = 1.0 - 2.0 * state[i]
            delta = sign * (diag[i] + 2.0 * field[i])
            if delta <= 0.0 or uniforms[s, i] < np.exp(-beta * delta):
                state[i] = 1 - state[i]
                total += delta
                for k in range(indptr[i], indptr[i + 1]):
                    field[indices[k]] += sign * data[k]
    return total


def _offdiag_csr(qp: QuboProblem):
    off = (qp.Q - sparse.diags(qp.Q.diagonal())).tocsr()
    off.eliminate_zeros()
    off.sort_indices()
    return (
        off.indptr.astype(np.int64),
        off.indices.astype(np.int64),
        off.data.astype(np.float64),
        qp.Q.diagonal().astype(np.float64),
    )


def delta_energy(qp: QuboProblem, q, i: int) -> float:
    """Energy change of flipping bit ``i`` of ``q`` (reference, O(N))."""
    q = np.asarray(q, dtype=float)
    row = qp.Q.getrow(i).toarray().ravel()
    field = row @ q - row[i] * q[i]
    return (1.0 - 2.0 * q[i]) * (row[i] + 2.0 * field)


def beta_schedule(sweeps: int, beta_range: tuple[float, float]) -> np.ndarray:
    beta_min, beta_max = beta_range
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    if not 0 < beta_min < beta_max:
        raise ValueError(f"need 0 < beta_min < beta_max, got {beta_range}")
    return np.geomspace(beta_min, beta_max, sweeps)


def sample_sa(
    qp: QuboProblem,
    n_samples: int,
    sweeps: int = DEFAULT_SWEEPS,
    beta_range: tuple[float, float] = DEFAULT_BETA_RANGE,
    seed: int | None = 0,
    schedule: ScheduleSpec | None = None,
) -> SampleSet:
    """Independent simulated-annealing chains, one final state each.

    Chain ``i`` draws its start state and acceptance numbers from
    ``default_rng([seed, i])``, so results do not depend on how chains are
    distributed across workers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    betas = beta_schedule(sweeps, beta_range)
    indptr, indices, data, diag = _offdiag_csr(qp)
    base = 0 if seed is None else seed
    t0 = time.perf_counter()
    states = np.empty((n_samples, qp.N), dtype=np.uint8)
    for chain in range(n_samples):
        rng = np.random.default_rng([base, chain])
        state = rng.integers(0, 2, size=qp.N).astype(np.int64)
        uniforms = rng.random((sweeps, qp.N))
        _anneal_chain(indptr, indices, data, diag, state, betas, uniforms)
        states[chain] = state
    energies = qp.energies(states)
    return SampleSet.from_bits(
        states, energies, "sa", seed=seed, schedule=schedule,
        wall_time_s=time.perf_counter() - t0,
        meta={"sweeps": sweeps, "beta_range": list(beta_range)},
    )
