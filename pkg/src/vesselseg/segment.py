"""Main-vessel extraction by radius thresholding and depth-first traversal.

The traversal works on the (coordinates | radius) graph itself, never on
pixels. Nodes below ``r_min_ratio * r_max`` are dropped, the largest
surviving component is traversed from the root, and everything reached
forms the main-vessel graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .graph import EmptyGraphError, VesselGraph, max_radius
from .raster import Mask, render_mask

ROOT_POLICIES = ("max-radius", "explicit-id", "region-center")


class RootNotFoundError(KeyError):
    pass


class EmptyRegionError(ValueError):
    pass


class EmptySelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SegmentorParams:
    r_min_ratio: float = 0.2
    connectivity_radius: float | None = None
    root_policy: str = "max-radius"
    root_id: int | None = None
    region_center: tuple | None = None
    region_radius: float | None = None
    abs_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.r_min_ratio <= 1.0:
            raise ValueError("r_min_ratio must lie in [0, 1]")
        if self.connectivity_radius is not None and not self.connectivity_radius > 0:
            raise ValueError("connectivity_radius must be positive")
        if self.root_policy not in ROOT_POLICIES:
            raise ValueError(f"root_policy must be one of {ROOT_POLICIES}")
        if self.root_policy == "explicit-id" and self.root_id is None:
            raise ValueError("explicit-id policy needs root_id")
        if self.root_policy == "region-center" and (
            self.region_center is None or self.region_radius is None
        ):
            raise ValueError("region-center policy needs region_center and region_radius")


@dataclass(frozen=True)
class MainVesselResult:
    g_main: VesselGraph
    kept_nodes: int
    threshold_abs: float
    root_id: int
    trace: list = field(default_factory=list, repr=False)  # visit order: (step, id, r)

    @property
    def node_ids(self) -> set:
        return set(self.g_main.ids.tolist())


def build_edges(nodes, connectivity_radius) -> VesselGraph:
    """Link nodes closer than ``connectivity_radius`` with paired directed edges.

    Graphs that already carry links are returned untouched.
    """
    g = nodes if isinstance(nodes, VesselGraph) else VesselGraph.from_nodes(nodes)
    if g.node_count == 0:
        raise EmptyGraphError("empty-graph")
    if g.has_edges:
        return g
    pairs = cKDTree(g.xyz).query_pairs(connectivity_radius, output_type="ndarray")
    if len(pairs) == 0:
        return g
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    both = np.concatenate([pairs, pairs[:, ::-1]])
    return g.replace(extra_edges=g.ids[both])


def filter_by_radius(g: VesselGraph, r_min_ratio, abs_floor=0.0) -> np.ndarray:
    """Boolean row mask of ``r >= r_min_ratio * r_max`` (and ``>= abs_floor``)."""
    thr = max(r_min_ratio * max_radius(g), abs_floor)
    return g.r >= thr


def select_root(g: VesselGraph, policy="max-radius", root_id=None,
                region_center=None, region_radius=None) -> int:
    """Root node id under the given policy; radius ties go to the smallest id."""
    if g.node_count == 0:
        raise EmptyGraphError("empty-graph")
    if policy == "explicit-id":
        if root_id is None or not g.contains([root_id])[0]:
            raise RootNotFoundError(f"root-not-found: {root_id}")
        return int(root_id)
    if policy == "max-radius":
        return _argmax_radius(g, np.ones(g.node_count, dtype=bool))
    if policy == "region-center":
        c = np.asarray(region_center, dtype=np.float64)
        d = np.linalg.norm(g.xyz[:, : c.size] - c, axis=1)
        inside = d <= region_radius
        if not inside.any():
            raise EmptyRegionError("empty-region")
        return _argmax_radius(g, inside)
    raise ValueError(f"unknown root policy {policy!r}")


def _argmax_radius(g, rows):
    cand = np.flatnonzero(rows)
    r = g.r[cand]
    best = cand[r == r.max()]
    return int(g.ids[best].min())


def _undirected_csr(g: VesselGraph, keep):
    """Row-index CSR of links among kept rows, neighbors sorted for traversal.

    Neighbors are ordered by descending radius, then ascending id. Moving
    from ``u`` to ``v`` follows the direction in which ``w(e_vu) = r_v``
    ranks the candidates.
    """
    n = g.node_count
    e = g.edge_index_pairs()
    if e.size:
        e = e[keep[e[:, 0]] & keep[e[:, 1]] & (e[:, 0] != e[:, 1])]
    src = np.concatenate([e[:, 0], e[:, 1]]) if e.size else np.empty(0, np.int64)
    dst = np.concatenate([e[:, 1], e[:, 0]]) if e.size else np.empty(0, np.int64)
    if src.size:
        code = np.unique(src * n + dst)
        src, dst = code // n, code % n
        order = np.lexsort((g.ids[dst], -g.r[dst], src))
        src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst


def extract_main(g: VesselGraph, params: SegmentorParams = SegmentorParams()) -> MainVesselResult:
    """Threshold, keep the largest surviving component, traverse it from the root.

    If the policy's root did not survive, or lies outside the largest
    component, that component's largest-radius node becomes the root.
    """
    if g.node_count == 0:
        raise EmptyGraphError("empty-graph")
    if not g.has_edges and params.connectivity_radius is not None:
        g = build_edges(g, params.connectivity_radius)
    root = select_root(g, params.root_policy, params.root_id,
                       params.region_center, params.region_radius)
    thr = max(params.r_min_ratio * max_radius(g), params.abs_floor)
    keep = g.r >= thr
    if not keep.any():
        raise EmptySelectionError("empty-selection")

    n = g.node_count
    indptr, nbr = _undirected_csr(g, keep)
    adj = csr_matrix((np.ones(nbr.size, dtype=np.int8), nbr.copy(), indptr.copy()), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    labels = np.where(keep, labels, -1)
    sizes = np.bincount(labels[keep])
    best = np.flatnonzero(sizes == sizes.max())
    if best.size > 1:
        min_id = np.full(sizes.size, np.iinfo(np.int64).max)
        np.minimum.at(min_id, labels[keep], g.ids[keep])
        best = best[np.argmin(min_id[best])]
    else:
        best = best[0]
    comp = labels == best

    root_row = int(g.index_of([root])[0])
    if not comp[root_row]:
        root = _argmax_radius(g, comp)
        root_row = int(g.index_of([root])[0])

    order = _dfs(indptr.tolist(), nbr.tolist(), root_row, n)
    visited = np.zeros(n, dtype=bool)
    visited[order] = True
    ids, r = g.ids[order].tolist(), g.r[order].tolist()
    trace = list(zip(range(len(order)), ids, r))
    g_main = g.subgraph(visited).replace(root=root)
    return MainVesselResult(g_main, len(order), float(thr), int(root), trace)


def _dfs(indptr, nbr, start, n):
    seen = bytearray(n)
    order = []
    stack = [start]
    pop, push, visit = stack.pop, stack.extend, order.append
    while stack:
        u = pop()
        if seen[u]:
            continue
        seen[u] = 1
        visit(u)
        # reversed push: the highest-priority neighbor is expanded first
        push(nbr[indptr[u]:indptr[u + 1]][::-1])
    return order


def main_vessel_mask(result: MainVesselResult, width, height, pixel_size,
                     threshold=0.5) -> Mask:
    return render_mask(result.g_main, width, height, pixel_size, threshold)


def segment(g: VesselGraph, r_min_ratio=0.2, **kw) -> MainVesselResult:
    """Shorthand for :func:`extract_main` with keyword parameters."""
    return extract_main(g, SegmentorParams(r_min_ratio=r_min_ratio, **kw))
