"""Traffic demands between ordered node pairs and their discretization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .topology import Topology

CIRCUIT_RATE_GBPS = 100.0


@dataclass(frozen=True)
class Demand:
    source: int
    target: int
    volume_gbps: float

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"demand endpoints must differ, got N{self.source}->N{self.target}")
        if self.volume_gbps < 0:
            raise ValueError(f"demand volume must be non-negative, got {self.volume_gbps}")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.source, self.target)


@dataclass(frozen=True)
class DemandSet:
    demands: tuple[Demand, ...]
    seed: int | None = None
    mu: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(self.demands))
        pairs = [d.pair for d in self.demands]
        if len(set(pairs)) != len(pairs):
            raise ValueError("demand pairs must be unique")

    def __len__(self) -> int:
        return len(self.demands)

    def __iter__(self):
        return iter(self.demands)

    def __getitem__(self, i: int) -> Demand:
        return self.demands[i]

    def subset(self, n: int) -> DemandSet:
        """First ``n`` demands, e.g. to build instances small enough for exhaustive search."""
        return DemandSet(self.demands[:n], self.seed, self.mu, self.sigma)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mu": self.mu,
            "sigma": self.sigma,
            "demands": [{"src": d.source, "dst": d.target, "gbps": d.volume_gbps} for d in self.demands],
        }

    @classmethod
    def from_dict(cls, data: dict) -> DemandSet:
        demands = tuple(Demand(int(d["src"]), int(d["dst"]), float(d["gbps"])) for d in data["demands"])
        return cls(demands, data.get("seed"), data.get("mu"), data.get("sigma"))


def ordered_pairs(t: Topology) -> list[tuple[int, int]]:
    ids = t.node_ids
    return [(u, v) for u in ids for v in ids if u != v]


def sample_demands(t: Topology, mu: float, sigma: float, seed: int) -> DemandSet:
    """Draw one demand per ordered node pair from N(mu, sigma), clipped at 0.

    Pairs are visited in lexicographic order ``(1,2), (1,3), ..., (n,n-1)``,
    which fixes the mapping from the seeded draw to demands.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    pairs = ordered_pairs(t)
    rng = np.random.default_rng(seed)
    if sigma == 0:
        volumes = np.full(len(pairs), float(mu))
    else:
        volumes = np.maximum(rng.normal(mu, sigma, size=len(pairs)), 0.0)
    demands = tuple(Demand(u, v, float(h)) for (u, v), h in zip(pairs, volumes))
    return DemandSet(demands, seed, float(mu), float(sigma))


def discretize(volume_gbps: float, xi: float = CIRCUIT_RATE_GBPS, a: int = 1) -> Fraction:
    """Round ``volume_gbps / xi`` up to the next multiple of ``2**-a``.

    >>> discretize(76, 100, 1)
    Fraction(1, 1)
    >>> discretize(75, 100, 2)
    Fraction(3, 4)
    """
    if not xi > 0:
        raise ValueError(f"circuit rate must be positive, got {xi}")
    if a < 0:
        raise ValueError(f"number of digits must be non-negative, got {a}")
    scale = 2 ** a
    # Exact rational arithmetic so that e.g. 75*4/100 lands exactly on 3.
    numer = math.ceil(Fraction(volume_gbps) * scale / Fraction(xi))
    return Fraction(numer, scale)


def save_demands(ds: DemandSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ds.to_dict(), indent=2) + "\n")


def load_demands(path: str | Path) -> DemandSet:
    return DemandSet.from_dict(json.loads(Path(path).read_text()))
