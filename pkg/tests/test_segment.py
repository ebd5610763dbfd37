from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, random_graph
from oracles import brute_extract, capsule_pixels, components, graph_edges
from vesselseg.graph import EmptyGraphError, VesselGraph, VesselNode
from vesselseg.raster import render_mask
from vesselseg.segment import (EmptyRegionError, EmptySelectionError, RootNotFoundError,
                               SegmentorParams, _undirected_csr, build_edges, extract_main,
                               filter_by_radius, main_vessel_mask, segment, select_root)


def nodes_graph(ids, radii, xyz=None):
    n = len(ids)
    xyz = np.zeros((n, 3)) if xyz is None else xyz
    return VesselGraph(ids, xyz, radii)


# -- build_edges ---------------------------------------------------------------


def test_build_edges_close_pair():
    g = build_edges([VesselNode(0, 0, 0, 0, 1.0), VesselNode(1, 0.5, 0, 0, 2.0)], 1.0)
    assert sorted(map(tuple, g.extra_edges.tolist())) == [(0, 1), (1, 0)]
    w = {(e.source, e.target): e.weight for e in g.edges}
    assert w == {(0, 1): 1.0, (1, 0): 2.0}


def test_build_edges_far_pair():
    g = build_edges([VesselNode(0, 0, 0, 0, 1.0), VesselNode(1, 2.0, 0, 0, 2.0)], 1.0)
    assert len(g.edge_array) == 0


def test_build_edges_passes_linked_tree(tree_1k):
    g = build_edges(tree_1k, 5.0)
    assert np.array_equal(g.edge_array, tree_1k.edge_array)


def test_build_edges_empty():
    with pytest.raises(EmptyGraphError):
        build_edges([], 1.0)


# -- filter / root -------------------------------------------------------------


def test_filter_examples():
    g = nodes_graph(np.arange(5), [1, 2, 3, 4, 5])
    assert filter_by_radius(g, 0.2).all()
    assert filter_by_radius(g, 1.0).tolist() == [False] * 4 + [True]
    assert filter_by_radius(g, 0.0).all()
    with pytest.raises(EmptyGraphError):
        filter_by_radius(VesselGraph.empty(), 0.2)


def test_select_root_examples():
    assert select_root(nodes_graph([0, 1, 2], [1, 5, 3])) == 1
    assert select_root(nodes_graph([9, 4], [5, 5])) == 4
    g = nodes_graph([4, 9], [5, 5])
    assert select_root(g, "explicit-id", root_id=9) == 9
    with pytest.raises(RootNotFoundError):
        select_root(g, "explicit-id", root_id=3)


def test_select_root_region():
    xyz = np.array([[0, 0, 0], [1, 0, 0], [5, 0, 0]], float)
    g = nodes_graph([0, 1, 2], [1, 2, 9], xyz)
    assert select_root(g, "region-center", region_center=(0, 0), region_radius=1.5) == 1
    with pytest.raises(EmptyRegionError):
        select_root(g, "region-center", region_center=(20, 0), region_radius=1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        SegmentorParams(r_min_ratio=1.5)
    with pytest.raises(ValueError):
        SegmentorParams(root_policy="optic-nerve")
    with pytest.raises(ValueError):
        SegmentorParams(connectivity_radius=0)


# -- extract_main --------------------------------------------------------------


def test_chain_example():
    # root(5) - a(3) - b(0.5) - c(4)
    res = segment(chain([5, 3, 0.5, 4]), 0.6)
    assert res.node_ids == {0, 1}
    assert res.threshold_abs == pytest.approx(3.0)
    assert res.root_id == 0


def test_star_example():
    xyz = np.zeros((5, 3))
    g = VesselGraph(np.arange(5), xyz, [5, 1, 2, 3, 4], [-1, 0, 0, 0, 0])
    assert segment(g, 0.5).node_ids == {0, 3, 4}


@pytest.mark.parametrize("ratio", [0.0, 0.3, 1.0])
def test_single_node(ratio):
    res = segment(nodes_graph([7], [2.0]), ratio)
    assert res.node_ids == {7} and res.kept_nodes == 1


def test_effective_root_fallback():
    # the big root sits alone; the larger surviving component is a-b-c
    g = VesselGraph(np.arange(5), np.zeros((5, 3)), [10, 0.1, 4, 3, 5], [-1, 0, 1, 2, 3])
    res = segment(g, 0.25)
    assert res.node_ids == {2, 3, 4}
    assert res.root_id == 4


def test_abs_floor_empty_selection():
    with pytest.raises(EmptySelectionError):
        extract_main(chain([1, 2]), SegmentorParams(abs_floor=5.0))
    with pytest.raises(EmptyGraphError):
        segment(VesselGraph.empty())


def test_explicit_root_missing():
    with pytest.raises(RootNotFoundError):
        segment(chain([1, 2]), root_policy="explicit-id", root_id=42)


def test_priority_order_in_trace():
    xyz = np.zeros((4, 3))
    g = VesselGraph([0, 1, 2, 3], xyz, [5, 1, 3, 3], [-1, 0, 0, 0])
    res = segment(g, 0.0)
    assert [t[1] for t in res.trace] == [0, 2, 3, 1]
    assert [t[0] for t in res.trace] == [0, 1, 2, 3]


def test_connectivity_radius_for_unlinked_nodes():
    pts = [VesselNode(i, 0.1 * i, 0, 0, 1.0 + (i == 0)) for i in range(5)]
    pts.append(VesselNode(9, 5.0, 0, 0, 1.5))
    g = VesselGraph.from_nodes(pts)
    res = extract_main(g, SegmentorParams(r_min_ratio=0.1, connectivity_radius=0.15))
    assert res.node_ids == {0, 1, 2, 3, 4}


def _check_against_oracle(g, ratio):
    ids, radii = g.ids.tolist(), g.r.tolist()
    parents = g.parent.tolist()
    edges = graph_edges(ids, parents, g.extra_edges.tolist())
    expected, root = brute_extract(ids, radii, edges, ratio)
    res = segment(g, ratio)
    assert res.node_ids == expected
    assert res.root_id == root
    # type invariants
    assert np.all(res.g_main.r >= res.threshold_abs)
    sub = [(a, b) for a, b in edges if a in expected and b in expected]
    assert len(components(expected, sub)) == 1


def test_oracle_fixed_seeds():
    rng = np.random.default_rng(123)
    for _ in range(100):
        g = random_graph(rng, 200)
        _check_against_oracle(g, float(rng.choice([0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0])))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_oracle_hypothesis(seed, ratio):
    _check_against_oracle(random_graph(np.random.default_rng(seed), 120), ratio)


def test_oracle_on_tree(tree_1k):
    for ratio in (0.0, 0.2, 0.5):
        _check_against_oracle(tree_1k, ratio)


def test_dfs_and_bfs_reach_same_set():
    rng = np.random.default_rng(8)
    for _ in range(50):
        g = random_graph(rng, 300)
        res = segment(g, 0.2)
        keep = filter_by_radius(g, 0.2)
        indptr, nbr = _undirected_csr(g, keep)
        start = int(g.index_of([res.root_id])[0])
        seen, q = {start}, deque([start])
        while q:
            u = q.popleft()
            for v in nbr[indptr[u]:indptr[u + 1]]:
                if v not in seen:
                    seen.add(int(v))
                    q.append(int(v))
        assert set(g.ids[list(seen)].tolist()) == res.node_ids


def test_filter_stage_monotone(tree_5k):
    grid = np.linspace(0, 1, 21)
    sizes = [int(filter_by_radius(tree_5k, r).sum()) for r in grid]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_visits_bounded(tree_5k):
    res = segment(tree_5k, 0.2)
    assert res.kept_nodes == len(res.trace) <= int(filter_by_radius(tree_5k, 0.2).sum())
    assert len(set(t[1] for t in res.trace)) == len(res.trace)


# -- masks ---------------------------------------------------------------------


def test_single_node_disc_mask():
    ps, w = 0.01, 24
    g = VesselGraph([3], [[0.12, 0.12, 0]], [0.05], [-1])
    m = main_vessel_mask(segment(g, 0.5), w, w, ps).data.astype(bool)
    inner = capsule_pixels(w, w, ps, (0.12, 0.12), (0.12, 0.12), 0.05, 0.05)
    outer = capsule_pixels(w, w, ps, (0.12, 0.12), (0.12, 0.12), 0.05, 0.05, margin=1.0)
    assert m[inner].all() and not m[~outer].any()


def test_main_mask_subset_and_full(tree_1k):
    w = 128
    ps = tree_1k.fov_mm / w
    full = render_mask(tree_1k, w, w, ps).data
    main = main_vessel_mask(segment(tree_1k, 0.2), w, w, ps).data
    assert np.all(full >= main)
    assert np.array_equal(main_vessel_mask(segment(tree_1k, 0.0), w, w, ps).data, full)
