import json
import math

import networkx as nx
import pytest

from wanqubo.topology import (
    GROWTH_ORDER,
    Edge,
    Node,
    Topology,
    TopologyError,
    build_growing_topology,
    load_topology,
    save_topology,
)

DIAG = 300 * math.sqrt(2)
LINKED = {(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)}


def pairwise_edges(n, pitch=300.0):
    """Reference edge set: every pair of placed nodes whose offset is a linked direction."""
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            (ci, ri), (cj, rj) = GROWTH_ORDER[i], GROWTH_ORDER[j]
            off = (cj - ci, rj - ri)
            if off in LINKED:
                out[(i + 1, j + 1)] = pitch * math.hypot(*off)
    return out


def as_graph(t):
    g = nx.Graph()
    g.add_nodes_from(t.node_ids)
    g.add_weighted_edges_from((e.a, e.b, e.length_km) for e in t.edges)
    return g


def test_three_node_triangle():
    t = build_growing_topology(3)
    got = {(e.a, e.b): e.length_km for e in t.edges}
    assert set(got) == {(1, 2), (1, 3), (2, 3)}
    assert got[(1, 2)] == 300.0
    assert got[(1, 3)] == 300.0
    assert got[(2, 3)] == pytest.approx(424.264069, abs=1e-6)


def test_fourth_node_adds_two_edges():
    e3 = {e.endpoints for e in build_growing_topology(3).edges}
    e4 = {e.endpoints for e in build_growing_topology(4).edges}
    assert e4 - e3 == {(2, 4), (3, 4)}
    assert (1, 4) not in e4


@pytest.mark.parametrize("n", range(3, 17))
def test_matches_pairwise_rule(n):
    t = build_growing_topology(n)
    got = {(e.a, e.b): e.length_km for e in t.edges}
    ref = pairwise_edges(n)
    assert got.keys() == ref.keys()
    for k in ref:
        assert got[k] == pytest.approx(ref[k], rel=1e-12)


@pytest.mark.parametrize("n", range(3, 17))
def test_connected_and_lengths(n):
    t = build_growing_topology(n)
    assert len(t) == n
    assert nx.is_connected(as_graph(t))
    for e in t.edges:
        assert e.length_km == 300.0 or e.length_km == pytest.approx(DIAG)


@pytest.mark.parametrize("n", range(3, 16))
def test_growth_is_monotone(n):
    small = build_growing_topology(n)
    big = build_growing_topology(n + 1)
    assert small.nodes == big.nodes[:n]
    assert set(small.edges) <= set(big.edges)
    assert all(n + 1 in e.endpoints for e in set(big.edges) - set(small.edges))


def test_pitch_scales_lengths():
    t = build_growing_topology(5, pitch_km=100)
    assert {round(e.length_km, 6) for e in t.edges} == {100.0, round(100 * math.sqrt(2), 6)}


@pytest.mark.parametrize("n", [2, 17, 0])
def test_size_out_of_range(n):
    with pytest.raises(TopologyError):
        build_growing_topology(n)


def test_zero_pitch_rejected():
    with pytest.raises(TopologyError):
        build_growing_topology(3, pitch_km=0)


def test_round_trip(tmp_path):
    t = build_growing_topology(16)
    path = tmp_path / "t.json"
    save_topology(t, path)
    back = load_topology(path)
    assert back == t
    assert len(back) == 16


def test_edges_are_canonical():
    t = Topology((Node(1, 0, 0), Node(2, 1, 0)), (Edge(2, 1, 300.0),))
    assert t.edges == (Edge(1, 2, 300.0),)
    assert t.edge_length(2, 1) == 300.0
    with pytest.raises(TopologyError):
        t.edge_length(1, 1)


def _doc(edges):
    return {
        "pitch_km": 300,
        "nodes": [{"id": 1, "col": 0, "row": 0}, {"id": 2, "col": 1, "row": 0}, {"id": 3, "col": 0, "row": 1}],
        "edges": [{"a": a, "b": b, "length_km": w} for a, b, w in edges],
    }


@pytest.mark.parametrize(
    "edges",
    [
        [(1, 2, 300), (2, 1, 300), (1, 3, 300)],  # duplicate
        [(1, 2, 300)],  # N3 unreachable
        [(1, 2, 300), (1, 3, 0)],  # zero length
        [(1, 2, 300), (1, 4, 300)],  # unknown node
        [(1, 1, 300), (1, 2, 300), (1, 3, 300)],  # self-loop
    ],
)
def test_invalid_documents(tmp_path, edges):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(_doc(edges)))
    with pytest.raises(TopologyError):
        load_topology(path)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nodes:")
    with pytest.raises(TopologyError):
        load_topology(path)
    with pytest.raises(TopologyError):
        Topology.from_dict({"nodes": [{"id": 1}]})
