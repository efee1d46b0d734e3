"""Transmission paths, circuit paths and circuit-path patterns.

Terminology:

* a *transmission path* is the end-to-end node sequence of one demand;
* a *circuit path* is a node sequence carried by a single optical circuit
  (one edge = direct, several edges within optical reach = bypass);
* a *pattern* splits a transmission path into consecutive circuit paths.

The catalog collects, per demand, all patterns over its ``k`` shortest
transmission paths, the circuit paths they reference, and the two binary
incidence matrices used by the ILP: ``rho`` (circuit path x pattern) and
``phi`` (node x circuit path).
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .topology import Topology
from .traffic import Demand, DemandSet

DEFAULT_REACH_KM = 1000.0
DEFAULT_K = 2
DEFAULT_MAX_PATTERNS = 4

# Path lengths are compared after rounding, so that sums of the same edge
# lengths in a different order still tie.
_LENGTH_DIGITS = 6


class NoPathError(ValueError):
    pass


def _len_key(length: float) -> float:
    return round(length, _LENGTH_DIGITS)


@dataclass(frozen=True)
class CircuitPath:
    nodes: tuple[int, ...]
    length_km: float

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    @property
    def n_edges(self) -> int:
        return len(self.nodes) - 1


@dataclass(frozen=True)
class TransmissionPath:
    nodes: tuple[int, ...]
    length_km: float


@dataclass(frozen=True)
class Pattern:
    """A transmission path split at ``cuts`` into circuit-path segments.

    ``segments`` holds the node sequences of the segments; once the pattern
    is placed in a catalog, ``circuits`` holds the matching indices into C.
    """

    path: TransmissionPath
    segments: tuple[tuple[int, ...], ...]
    circuits: tuple[int, ...] = ()

    @property
    def n_circuits(self) -> int:
        return len(self.segments)

    def nodes(self) -> tuple[int, ...]:
        out = list(self.segments[0])
        for seg in self.segments[1:]:
            out.extend(seg[1:])
        return tuple(out)


def path_length(t: Topology, nodes: tuple[int, ...]) -> float:
    return sum(t.edge_length(u, v) for u, v in zip(nodes, nodes[1:]))


def _dijkstra(adj, source, target, banned_nodes, banned_edges):
    """Shortest path avoiding banned nodes/edges; ties go to the lexicographically smaller path."""
    heap = [(0.0, (source,))]
    done = set()
    while heap:
        dist, path = heapq.heappop(heap)
        u = path[-1]
        if u == target:
            return dist, path
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u].items():
            if v in done or v in banned_nodes or (u, v) in banned_edges:
                continue
            heapq.heappush(heap, (_len_key(dist + w), path + (v,)))
    return None


def k_shortest_transmission_paths(t: Topology, d: Demand, k: int = DEFAULT_K) -> list[TransmissionPath]:
    """Yen's algorithm for the ``k`` shortest loop-free paths of demand ``d``.

    Paths come out in ascending length; equal lengths are ordered by their
    node sequence.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if d.source == d.target:
        raise ValueError("source and target must differ")
    adj = t.adjacency
    if d.source not in adj or d.target not in adj:
        raise NoPathError(f"demand N{d.source}->N{d.target} references unknown nodes")

    first = _dijkstra(adj, d.source, d.target, frozenset(), frozenset())
    if first is None:
        raise NoPathError(f"no path from N{d.source} to N{d.target}")
    found = [first]
    candidates: list[tuple[float, tuple[int, ...]]] = []
    seen = {first[1]}
    while len(found) < k:
        _, last = found[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            banned_edges = set()
            for _, p in found:
                if p[: i + 1] == root:
                    banned_edges.add((p[i], p[i + 1]))
            spur = _dijkstra(adj, root[-1], d.target, frozenset(root[:-1]), frozenset(banned_edges))
            if spur is None:
                continue
            total = root[:-1] + spur[1]
            if total not in seen:
                seen.add(total)
                heapq.heappush(candidates, (_len_key(path_length(t, total)), total))
        if not candidates:
            break
        found.append(heapq.heappop(candidates))
    return [TransmissionPath(p, path_length(t, p)) for _, p in found]


def enumerate_patterns(
    t: Topology,
    path: TransmissionPath,
    reach_km: float = DEFAULT_REACH_KM,
    max_patterns: int | None = None,
) -> list[Pattern]:
    """All splits of ``path`` into circuit paths no longer than ``reach_km``.

    Order: the all-single-edge split first, then by ascending number of
    circuit paths, ties by descending segment lengths (first segment first).
    """
    if not reach_km > 0:
        raise ValueError(f"optical reach must be positive, got {reach_km}")
    nodes = path.nodes
    n_edges = len(nodes) - 1
    edge_len = [t.edge_length(u, v) for u, v in zip(nodes, nodes[1:])]
    for (u, v), w in zip(zip(nodes, nodes[1:]), edge_len):
        if _len_key(w) > _len_key(reach_km):
            raise NoPathError(f"edge N{u}-N{v} ({w:.2f} km) exceeds the optical reach of {reach_km} km")

    splits = []
    for n_cuts in range(n_edges):
        for cuts in itertools.combinations(range(1, n_edges), n_cuts):
            bounds = (0, *cuts, n_edges)
            seg_len = [sum(edge_len[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]
            if all(_len_key(s) <= _len_key(reach_km) for s in seg_len):
                splits.append((bounds, seg_len))

    def order(item):
        bounds, seg_len = item
        single_edge = len(seg_len) == n_edges
        return (not single_edge, len(seg_len), [-_len_key(s) for s in seg_len], bounds)

    splits.sort(key=order)
    if max_patterns is not None:
        splits = splits[:max_patterns]
    return [
        Pattern(path, tuple(nodes[lo : hi + 1] for lo, hi in zip(b, b[1:])))
        for b, _ in splits
    ]


@dataclass
class PathCatalog:
    """Circuit paths C and patterns T of a demand set, with incidence matrices.

    ``patterns[j]`` is column ``j`` of T; ``pattern_demand[j]`` is the index
    of its demand. Columns are grouped demand by demand in demand-set order,
    so ``demand_slices[d]`` is a contiguous range.
    """

    node_ids: list[int]
    circuits: list[CircuitPath]
    patterns: list[Pattern]
    pattern_demand: np.ndarray
    demand_slices: list[slice]
    transmission_paths: list[list[TransmissionPath]]
    k: int = DEFAULT_K
    max_patterns: int | None = DEFAULT_MAX_PATTERNS
    reach_km: float = DEFAULT_REACH_KM
    _rho: sparse.csr_matrix | None = field(default=None, repr=False)
    _phi: sparse.csr_matrix | None = field(default=None, repr=False)

    @property
    def n_demands(self) -> int:
        return len(self.demand_slices)

    @property
    def n_patterns(self) -> int:
        return len(self.patterns)

    @property
    def n_circuits(self) -> int:
        return len(self.circuits)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def patterns_of(self, d: int) -> list[Pattern]:
        return self.patterns[self.demand_slices[d]]

    @property
    def rho(self) -> sparse.csr_matrix:
        """|C| x |T| binary matrix: circuit path c is used by pattern t."""
        if self._rho is None:
            rows, cols = [], []
            for j, pat in enumerate(self.patterns):
                rows.extend(pat.circuits)
                cols.extend([j] * len(pat.circuits))
            data = np.ones(len(rows), dtype=np.int64)
            self._rho = sparse.csr_matrix((data, (rows, cols)), shape=(self.n_circuits, self.n_patterns))
        return self._rho

    @property
    def phi(self) -> sparse.csr_matrix:
        """|V| x |C| binary matrix: node v terminates circuit path c."""
        if self._phi is None:
            row_of = {v: i for i, v in enumerate(self.node_ids)}
            rows, cols = [], []
            for c, cp in enumerate(self.circuits):
                rows += [row_of[cp.source], row_of[cp.target]]
                cols += [c, c]
            data = np.ones(len(rows), dtype=np.int64)
            self._phi = sparse.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_circuits))
        return self._phi

    def to_dict(self) -> dict:
        rho = self.rho.tocoo()
        phi = self.phi.tocoo()
        return {
            "k": self.k,
            "max_patterns": self.max_patterns,
            "reach_km": self.reach_km,
            "node_ids": list(self.node_ids),
            "circuits": [{"nodes": list(c.nodes), "length_km": c.length_km} for c in self.circuits],
            "patterns": [
                {
                    "demand": int(self.pattern_demand[j]),
                    "path": list(p.path.nodes),
                    "path_length_km": p.path.length_km,
                    "circuits": list(p.circuits),
                }
                for j, p in enumerate(self.patterns)
            ],
            "transmission_paths": [
                [{"nodes": list(tp.nodes), "length_km": tp.length_km} for tp in paths]
                for paths in self.transmission_paths
            ],
            "rho": sorted([int(r), int(c)] for r, c in zip(rho.row, rho.col)),
            "phi": sorted([int(r), int(c)] for r, c in zip(phi.row, phi.col)),
        }

    @classmethod
    def from_dict(cls, data: dict) -> PathCatalog:
        circuits = [CircuitPath(tuple(c["nodes"]), float(c["length_km"])) for c in data["circuits"]]
        patterns = []
        demand_of = []
        for p in data["patterns"]:
            tp = TransmissionPath(tuple(p["path"]), float(p["path_length_km"]))
            refs = tuple(p["circuits"])
            patterns.append(Pattern(tp, tuple(circuits[c].nodes for c in refs), refs))
            demand_of.append(p["demand"])
        tps = [
            [TransmissionPath(tuple(tp["nodes"]), float(tp["length_km"])) for tp in paths]
            for paths in data["transmission_paths"]
        ]
        return cls(
            node_ids=list(data["node_ids"]),
            circuits=circuits,
            patterns=patterns,
            pattern_demand=np.asarray(demand_of, dtype=np.int64),
            demand_slices=_slices(demand_of, len(tps)),
            transmission_paths=tps,
            k=data.get("k", DEFAULT_K),
            max_patterns=data.get("max_patterns", DEFAULT_MAX_PATTERNS),
            reach_km=data.get("reach_km", DEFAULT_REACH_KM),
        )


def _slices(demand_of: list[int], n_demands: int) -> list[slice]:
    out = []
    start = 0
    for d in range(n_demands):
        stop = start
        while stop < len(demand_of) and demand_of[stop] == d:
            stop += 1
        out.append(slice(start, stop))
        start = stop
    if start != len(demand_of):
        raise ValueError("patterns are not grouped by demand in demand order")
    return out


def build_catalog(
    t: Topology,
    demands: DemandSet,
    k: int = DEFAULT_K,
    max_patterns: int | None = DEFAULT_MAX_PATTERNS,
    reach_km: float = DEFAULT_REACH_KM,
) -> PathCatalog:
    """Enumerate paths and patterns for every demand and index the circuit paths.

    Only circuit paths that occur in some pattern end up in C. C is sorted
    by (number of edges, node sequence): direct circuit paths first.
    """
    per_demand: list[list[Pattern]] = []
    tps: list[list[TransmissionPath]] = []
    for d in demands:
        paths = k_shortest_transmission_paths(t, d, k)
        tps.append(paths)
        pats = []
        for tp in paths:
            pats.extend(enumerate_patterns(t, tp, reach_km, max_patterns))
        per_demand.append(pats)

    used = {seg for pats in per_demand for p in pats for seg in p.segments}
    ordered = sorted(used, key=lambda s: (len(s), s))
    index = {seg: i for i, seg in enumerate(ordered)}
    circuits = [CircuitPath(seg, path_length(t, seg)) for seg in ordered]

    patterns = []
    demand_of = []
    for d, pats in enumerate(per_demand):
        for p in pats:
            patterns.append(Pattern(p.path, p.segments, tuple(index[s] for s in p.segments)))
            demand_of.append(d)
    return PathCatalog(
        node_ids=t.node_ids,
        circuits=circuits,
        patterns=patterns,
        pattern_demand=np.asarray(demand_of, dtype=np.int64),
        demand_slices=_slices(demand_of, len(demands)),
        transmission_paths=tps,
        k=k,
        max_patterns=max_patterns,
        reach_km=reach_km,
    )


def save_catalog(cat: PathCatalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cat.to_dict(), indent=1) + "\n")


def load_catalog(path: str | Path) -> PathCatalog:
    return PathCatalog.from_dict(json.loads(Path(path).read_text()))
