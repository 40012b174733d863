"""Topology construction, rank numbering, and graph queries."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmodel import TopologyError, TopologySpec, build_topology, neighbors, shortest_hops


def floyd_warshall(p: int, adjacency) -> list:
    """Independent all-pairs shortest-path oracle."""
    inf = float("inf")
    dist = [[0 if i == j else inf for j in range(p)] for i in range(p)]
    for u in range(p):
        for v in adjacency[u]:
            dist[u][v] = 1
    for k in range(p):
        for i in range(p):
            dik = dist[i][k]
            if dik == inf:
                continue
            row_k = dist[k]
            row_i = dist[i]
            for j in range(p):
                alt = dik + row_k[j]
                if alt < row_i[j]:
                    row_i[j] = alt
    return dist


def all_specs(max_p: int = 64) -> list:
    specs = []
    for p in (2, 3, 5, 17, max_p):
        specs.append(TopologySpec.from_args("farm", [p]))
        specs.append(TopologySpec.from_args("star", [p]))
        specs.append(TopologySpec.from_args("bus", [p]))
    for p in (3, 4, 7, 33, max_p):
        specs.append(TopologySpec.from_args("ring", [p]))
    for rows, cols in ((1, 1), (1, 8), (3, 3), (4, 5), (8, 8)):
        specs.append(TopologySpec.from_args("mesh2d", [rows, cols]))
    for dim in range(0, 7):
        specs.append(TopologySpec.from_args("hypercube", [dim]))
    for arity, depth in ((1, 5), (2, 0), (2, 2), (2, 5), (3, 3), (7, 2)):
        specs.append(TopologySpec.from_args("tree", [arity, depth]))
    return [s for s in specs if s.p <= max_p]


# -- fixed examples ---------------------------------------------------------

def test_mesh_3x3_degrees():
    g = build_topology(TopologySpec.from_args("mesh2d", [3, 3]))
    assert g.p == 9
    assert len(neighbors(g, 0)) == 2   # corner
    assert len(neighbors(g, 4)) == 4   # center
    assert neighbors(g, 4) == (1, 3, 5, 7)


def test_ring_degrees():
    g = build_topology(TopologySpec.from_args("ring", [5]))
    assert all(len(neighbors(g, u)) == 2 for u in range(5))


def test_hypercube_dim3():
    g = build_topology(TopologySpec.from_args("hypercube", [3]))
    assert g.p == 8
    assert all(len(neighbors(g, u)) == 3 for u in range(8))


def test_tree_binary_depth2():
    g = build_topology(TopologySpec.from_args("tree", [2, 2]))
    assert g.p == 7
    assert len(neighbors(g, 0)) == 2
    leaves = [u for u in range(7) if len(neighbors(g, u)) == 1]
    assert len(leaves) == 4


def test_farm_star_shape():
    g = build_topology(TopologySpec.from_args("farm", [5]))
    assert neighbors(g, 0) == (1, 2, 3, 4)
    assert neighbors(g, 3) == (0,)
    star = build_topology(TopologySpec.from_args("star", [5]))
    assert star.adjacency == g.adjacency


def test_mesh_manhattan_hops():
    g = build_topology(TopologySpec.from_args("mesh2d", [3, 3]))
    assert shortest_hops(g, 0, 8) == 4
    assert shortest_hops(g, 4, 4) == 0


def test_ring6_opposite_hops():
    # frozen from a breadth-first search over the 6-cycle
    g = build_topology(TopologySpec.from_args("ring", [6]))
    assert shortest_hops(g, 0, 3) == 3


def test_bus_is_one_hop_everywhere():
    g = build_topology(TopologySpec.from_args("bus", [6]))
    assert g.medium
    assert all(shortest_hops(g, u, v) == 1
               for u in range(6) for v in range(6) if u != v)


def test_shape_mismatch_errors():
    with pytest.raises(TopologyError):
        build_topology(TopologySpec("mesh2d", 5, rows=2, cols=2))
    with pytest.raises(TopologyError):
        build_topology(TopologySpec.from_args("ring", [2]))
    with pytest.raises(TopologyError):
        build_topology(TopologySpec.from_args("farm", [1]))
    with pytest.raises(TopologyError):
        TopologySpec.from_args("mesh2d", [3])


def test_rank_out_of_range():
    g = build_topology(TopologySpec.from_args("ring", [4]))
    with pytest.raises(TopologyError):
        neighbors(g, 4)
    with pytest.raises(TopologyError):
        shortest_hops(g, 0, -1)


# -- invariants over every kind ------------------------------------------------

@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: f"{s.kind}-p{s.p}")
def test_graph_invariants(spec):
    g = build_topology(spec)
    assert g.p == spec.p
    for u in range(g.p):
        assert u not in g.adjacency[u]                      # irreflexive
        for v in g.adjacency[u]:
            assert u in g.adjacency[v]                      # symmetric
    degree_sum = sum(len(a) for a in g.adjacency)
    assert degree_sum == 2 * len(g.edges())
    if g.p > 1:  # connected
        assert all(shortest_hops(g, 0, v) >= 1 for v in range(1, g.p))


@pytest.mark.parametrize("spec", [s for s in all_specs() if s.p <= 64],
                         ids=lambda s: f"{s.kind}-p{s.p}")
def test_hops_match_floyd_warshall(spec):
    g = build_topology(spec)
    dist = floyd_warshall(g.p, g.adjacency)
    for u in range(g.p):
        for v in range(g.p):
            expected = 1 if (g.medium and u != v) else dist[u][v]
            assert shortest_hops(g, u, v) == expected


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: f"{s.kind}-p{s.p}")
def test_build_is_deterministic(spec):
    assert build_topology(spec).adjacency == build_topology(spec).adjacency


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_random_topologies_match_bfs_oracle(data):
    kind = data.draw(st.sampled_from(
        ["farm", "star", "bus", "ring", "mesh2d", "hypercube", "tree"]))
    if kind in ("farm", "star", "bus"):
        args = [data.draw(st.integers(2, 64))]
    elif kind == "ring":
        args = [data.draw(st.integers(3, 64))]
    elif kind == "mesh2d":
        rows = data.draw(st.integers(1, 8))
        args = [rows, data.draw(st.integers(1, 64 // rows))]
    elif kind == "hypercube":
        args = [data.draw(st.integers(0, 6))]
    else:
        arity = data.draw(st.integers(1, 4))
        depth = data.draw(st.integers(0, 3 if arity > 1 else 30))
        args = [arity, depth]
    spec = TopologySpec.from_args(kind, args)
    if spec.p > 64:
        return
    g = build_topology(spec)
    dist = floyd_warshall(g.p, g.adjacency)
    for u in range(g.p):
        for v in range(g.p):
            expected = 1 if (g.medium and u != v) else dist[u][v]
            assert shortest_hops(g, u, v) == expected
