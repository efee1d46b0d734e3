"""Grid topologies for optical wide-area networks.

The growing-network family places nodes on a square grid (default pitch
300 km) in a fixed order and links each new node to already placed
horizontal/vertical neighbours and to its anti-diagonal neighbours.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

DEFAULT_PITCH_KM = 300.0

# (col, row) placement order of the growing network, N1..N16.
GROWTH_ORDER: tuple[tuple[int, int], ...] = (
    (0, 0), (1, 0), (0, 1), (1, 1),
    (2, 0), (2, 1), (0, 2), (1, 2), (2, 2),
    (3, 0), (3, 1), (3, 2),
    (0, 3), (1, 3), (2, 3), (3, 3),
)

MIN_NODES = 3
MAX_NODES = len(GROWTH_ORDER)


class TopologyError(ValueError):
    """Raised when a topology violates one of its structural invariants."""


@dataclass(frozen=True)
class Node:
    id: int
    col: int
    row: int

    @property
    def coord(self) -> tuple[int, int]:
        return (self.col, self.row)


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    length_km: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Topology:
    """Undirected weighted graph; validated on construction."""

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    pitch_km: float = DEFAULT_PITCH_KM

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        canon = []
        for e in self.edges:
            a, b = (e.a, e.b) if e.a <= e.b else (e.b, e.a)
            canon.append(Edge(a, b, float(e.length_km)))
        object.__setattr__(self, "edges", tuple(sorted(canon, key=lambda e: (e.a, e.b))))
        _validate(self)

    @property
    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def adjacency(self) -> dict[int, dict[int, float]]:
        """Neighbour map ``{u: {v: length_km}}`` (both directions)."""
        adj: dict[int, dict[int, float]] = {n.id: {} for n in self.nodes}
        for e in self.edges:
            adj[e.a][e.b] = e.length_km
            adj[e.b][e.a] = e.length_km
        return adj

    def edge_length(self, u: int, v: int) -> float:
        try:
            return self.adjacency[u][v]
        except KeyError:
            raise TopologyError(f"no edge between N{u} and N{v}") from None

    def to_dict(self) -> dict:
        return {
            "pitch_km": self.pitch_km,
            "nodes": [{"id": n.id, "col": n.col, "row": n.row} for n in self.nodes],
            "edges": [{"a": e.a, "b": e.b, "length_km": e.length_km} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Topology:
        try:
            nodes = [Node(int(n["id"]), int(n["col"]), int(n["row"])) for n in data["nodes"]]
            edges = [Edge(int(e["a"]), int(e["b"]), float(e["length_km"])) for e in data["edges"]]
            pitch = float(data.get("pitch_km", DEFAULT_PITCH_KM))
        except (KeyError, TypeError, ValueError) as exc:
            raise TopologyError(f"malformed topology document: {exc}") from exc
        return cls(tuple(nodes), tuple(edges), pitch)


def _validate(t: Topology) -> None:
    ids = [n.id for n in t.nodes]
    if ids != list(range(1, len(ids) + 1)):
        raise TopologyError(f"node ids must be consecutive from 1, got {ids}")
    coords = [n.coord for n in t.nodes]
    if len(set(coords)) != len(coords):
        raise TopologyError("node coordinates must be unique")
    known = set(ids)
    seen = set()
    for e in t.edges:
        if e.a == e.b:
            raise TopologyError(f"self-loop at N{e.a}")
        if e.a not in known or e.b not in known:
            raise TopologyError(f"edge N{e.a}-N{e.b} references an unknown node")
        if (e.a, e.b) in seen:
            raise TopologyError(f"duplicate edge N{e.a}-N{e.b}")
        if not (e.length_km > 0 and math.isfinite(e.length_km)):
            raise TopologyError(f"edge N{e.a}-N{e.b} has non-positive length {e.length_km}")
        seen.add((e.a, e.b))
    if ids and not _connected(ids, t.edges):
        raise TopologyError("topology is not connected")


def _connected(ids: list[int], edges: tuple[Edge, ...]) -> bool:
    adj: dict[int, list[int]] = {i: [] for i in ids}
    for e in edges:
        adj[e.a].append(e.b)
        adj[e.b].append(e.a)
    start = ids[0]
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(ids)


def build_growing_topology(n_nodes: int, pitch_km: float = DEFAULT_PITCH_KM) -> Topology:
    """Return the first ``n_nodes`` nodes of the growing grid network.

    Node ``k`` is linked to every already placed node that is a horizontal
    or vertical grid neighbour (``pitch_km``) or an anti-diagonal neighbour,
    i.e. offset by (+1, -1) or (-1, +1) (``pitch_km * sqrt(2)``).
    Main-diagonal neighbours are never linked.
    """
    if not MIN_NODES <= n_nodes <= MAX_NODES:
        raise TopologyError(f"n_nodes must be in {MIN_NODES}..{MAX_NODES}, got {n_nodes}")
    if not pitch_km > 0:
        raise TopologyError(f"grid pitch must be positive, got {pitch_km}")

    diag = pitch_km * math.sqrt(2.0)
    offsets = {
        (1, 0): pitch_km, (-1, 0): pitch_km, (0, 1): pitch_km, (0, -1): pitch_km,
        (1, -1): diag, (-1, 1): diag,
    }
    nodes: list[Node] = []
    edges: list[Edge] = []
    placed: dict[tuple[int, int], int] = {}
    for idx, (col, row) in enumerate(GROWTH_ORDER[:n_nodes], start=1):
        for (dc, dr), length in offsets.items():
            other = placed.get((col + dc, row + dr))
            if other is not None:
                edges.append(Edge(other, idx, length))
        placed[(col, row)] = idx
        nodes.append(Node(idx, col, row))
    return Topology(tuple(nodes), tuple(edges), pitch_km)


def save_topology(t: Topology, path: str | Path) -> None:
    Path(path).write_text(json.dumps(t.to_dict(), indent=2) + "\n")


def load_topology(path: str | Path) -> Topology:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}: not valid JSON ({exc})") from exc
    return Topology.from_dict(data)
