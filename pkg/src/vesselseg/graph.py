"""Structured vessel graph: centerline nodes carrying a local radius.

A graph stores node attributes as parallel numpy arrays. Tree links live in
``parent`` (parent id per node, ``-1`` for none); any additional directed
links live in ``extra_edges``. Every directed edge ``i -> j`` has weight
``r_i``, the radius of its source node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

NO_PARENT = -1


class EmptyGraphError(ValueError):
    """Raised by operations that need at least one node."""


class ShapeMismatchError(ValueError):
    """Paired arrays (masks, images, batches) with different shapes."""


class VesselNode(NamedTuple):
    id: int
    x: float
    y: float
    z: float
    r: float


class VesselEdge(NamedTuple):
    source: int
    target: int
    weight: float


class Violation(NamedTuple):
    kind: str
    detail: object = None


def _frozen(a, dtype, shape=None):
    arr = np.array(a, dtype=dtype, copy=True)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VesselGraph:
    """Immutable vessel graph.

    Parameters
    ----------
    ids : (N,) int
        Node ids, non-negative and unique.
    xyz : (N, 3) float
        Centerline coordinates in millimeters.
    r : (N,) float
        Local vessel radius in millimeters.
    parent : (N,) int, optional
        Parent id per node, ``-1`` for parentless nodes.
    extra_edges : (E, 2) int, optional
        Additional directed ``(from, to)`` id pairs.
    root : int or None
        Traversal root id.
    fov_mm : float
        Field of view the coordinates live in.
    """

    ids: np.ndarray
    xyz: np.ndarray
    r: np.ndarray
    parent: np.ndarray = None
    extra_edges: np.ndarray = None
    root: int | None = None
    fov_mm: float = 3.0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ids = _frozen(self.ids, np.int64).ravel()
        n = ids.size
        set_ = object.__setattr__
        set_(self, "ids", ids)
        set_(self, "xyz", _frozen(self.xyz, np.float64, (n, 3)))
        set_(self, "r", _frozen(self.r, np.float64, (n,)))
        parent = np.full(n, NO_PARENT) if self.parent is None else self.parent
        set_(self, "parent", _frozen(parent, np.int64, (n,)))
        extra = np.empty((0, 2)) if self.extra_edges is None else self.extra_edges
        set_(self, "extra_edges", _frozen(extra, np.int64, (-1, 2)))
        if self.root is not None:
            set_(self, "root", int(self.root))
        set_(self, "fov_mm", float(self.fov_mm))

    @classmethod
    def empty(cls, fov_mm=3.0):
        return cls(np.empty(0), np.empty((0, 3)), np.empty(0), fov_mm=fov_mm)

    @classmethod
    def from_nodes(cls, nodes, parents=None, extra_edges=None, root=None, fov_mm=3.0):
        """Build from an iterable of :class:`VesselNode` (or 5-tuples)."""
        nodes = [tuple(n) for n in nodes]
        if nodes:
            arr = np.array(nodes, dtype=np.float64)
            ids, xyz, r = arr[:, 0].astype(np.int64), arr[:, 1:4], arr[:, 4]
        else:
            ids, xyz, r = np.empty(0), np.empty((0, 3)), np.empty(0)
        if parents is not None:
            parents = [NO_PARENT if p is None else p for p in parents]
        return cls(ids, xyz, r, parents, extra_edges, root, fov_mm)

    # -- basic views -------------------------------------------------------

    @property
    def node_count(self) -> int:
        return int(self.ids.size)

    def __len__(self):
        return self.node_count

    @property
    def nodes(self) -> list[VesselNode]:
        return [
            VesselNode(int(i), float(p[0]), float(p[1]), float(p[2]), float(rr))
            for i, p, rr in zip(self.ids, self.xyz, self.r)
        ]

    @property
    def edge_array(self) -> np.ndarray:
        """All directed edges as an ``(E, 2)`` id array, tree links first."""
        has = self.parent != NO_PARENT
        tree = np.stack([self.parent[has], self.ids[has]], axis=1)
        return np.concatenate([tree, self.extra_edges]).astype(np.int64)

    @property
    def edges(self) -> list[VesselEdge]:
        e = self.edge_array
        w = self.edge_weights()
        return [VesselEdge(int(a), int(b), float(c)) for (a, b), c in zip(e, w)]

    def edge_weights(self) -> np.ndarray:
        """``w(e_ij) = r_i`` for every edge of :attr:`edge_array`."""
        e = self.edge_array
        if e.size == 0:
            return np.empty(0)
        return self.r[self.index_of(e[:, 0])]

    def iter_nodes(self) -> Iterator[VesselNode]:
        yield from self.nodes

    # -- id lookup ---------------------------------------------------------

    def _id_map(self):
        if self._index is None:
            order = np.argsort(self.ids, kind="stable")
            dense = bool(np.array_equal(self.ids, np.arange(self.ids.size)))
            object.__setattr__(
                self, "_index", {"order": order, "sorted": self.ids[order], "dense": dense}
            )
        return self._index

    def index_of(self, ids) -> np.ndarray:
        """Map node ids to row indices. Raises ``KeyError`` for unknown ids."""
        ids = np.asarray(ids, dtype=np.int64)
        m = self._id_map()
        if m["dense"]:
            if ids.size and (ids.min() < 0 or ids.max() >= self.ids.size):
                bad = ids[(ids < 0) | (ids >= self.ids.size)]
                raise KeyError(f"unknown node id(s): {bad[:5].tolist()}")
            return ids
        pos = np.searchsorted(m["sorted"], ids)
        pos = np.clip(pos, 0, max(len(m["sorted"]) - 1, 0))
        if m["sorted"].size == 0 or np.any(m["sorted"][pos] != ids):
            missing = np.setdiff1d(ids, m["sorted"])
            raise KeyError(f"unknown node id(s): {missing[:5].tolist()}")
        return m["order"][pos]

    def contains(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if self._id_map()["dense"]:
            return (ids >= 0) & (ids < self.ids.size)
        return np.isin(ids, self.ids)

    # -- structure ---------------------------------------------------------

    @property
    def has_edges(self) -> bool:
        return bool(np.any(self.parent != NO_PARENT) or self.extra_edges.size)

    def edge_index_pairs(self) -> np.ndarray:
        """Directed edges as row-index pairs; edges touching unknown ids are dropped."""
        e = self.edge_array
        if e.size == 0:
            return np.empty((0, 2), dtype=np.int64)
        ok = self.contains(e[:, 0]) & self.contains(e[:, 1])
        e = e[ok]
        if e.size == 0:
            return np.empty((0, 2), dtype=np.int64)
        return np.stack([self.index_of(e[:, 0]), self.index_of(e[:, 1])], axis=1)

    def component_labels(self) -> tuple[int, np.ndarray]:
        """Undirected connected-component labels per node row."""
        n = self.node_count
        e = self.edge_index_pairs()
        adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
        return connected_components(adj, directed=False)

    def subgraph(self, keep) -> "VesselGraph":
        """Induced subgraph on a boolean row mask (or array of row indices).

        Parent links to dropped nodes are cut; extra edges survive only if both
        endpoints do. The root survives if it is kept.
        """
        keep = np.asarray(keep)
        if keep.dtype != bool:
            m = np.zeros(self.node_count, dtype=bool)
            m[keep] = True
            keep = m
        kept_ids = self.ids[keep]
        parent = self.parent[keep].copy()
        parent[~np.isin(parent, kept_ids)] = NO_PARENT
        extra = self.extra_edges
        if extra.size:
            extra = extra[np.isin(extra[:, 0], kept_ids) & np.isin(extra[:, 1], kept_ids)]
        root = self.root if self.root is not None and self.root in set(kept_ids.tolist()) else None
        return VesselGraph(kept_ids, self.xyz[keep], self.r[keep], parent, extra, root, self.fov_mm)

    def replace(self, **kw) -> "VesselGraph":
        fields = dict(
            ids=self.ids, xyz=self.xyz, r=self.r, parent=self.parent,
            extra_edges=self.extra_edges, root=self.root, fov_mm=self.fov_mm,
        )
        fields.update(kw)
        return VesselGraph(**fields)

    def children_index(self) -> list[list[int]]:
        """Row indices of the tree children of every row."""
        kids: list[list[int]] = [[] for _ in range(self.node_count)]
        has = np.flatnonzero(self.parent != NO_PARENT)
        if has.size:
            pidx = self.index_of(self.parent[has])
            for c, p in zip(has.tolist(), pidx.tolist()):
                kids[p].append(c)
        return kids

    def __eq__(self, other):
        if not isinstance(other, VesselGraph):
            return NotImplemented
        return (
            self.root == other.root
            and self.fov_mm == other.fov_mm
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.extra_edges, other.extra_edges)
        )

    __hash__ = None


def validate(g: VesselGraph, tree: bool = False) -> list[Violation]:
    """List every violated invariant of ``g``; an empty list means valid.

    With ``tree=True`` the undirected link structure must additionally be a
    forest with at most one parent per node.
    """
    out: list[Violation] = []
    ids = g.ids
    uniq, counts = np.unique(ids, return_counts=True)
    for i in uniq[counts > 1]:
        out.append(Violation("duplicate-id", int(i)))
    for i in ids[ids < 0]:
        out.append(Violation("negative-id", int(i)))
    bad_xyz = ~np.isfinite(g.xyz).all(axis=1)
    for i in ids[bad_xyz]:
        out.append(Violation("non-finite-coordinate", int(i)))
    bad_r = ~np.isfinite(g.r)
    for i in ids[bad_r]:
        out.append(Violation("non-finite-radius", int(i)))
    for i in ids[np.isfinite(g.r) & (g.r <= 0)]:
        out.append(Violation("non-positive-radius", int(i)))
    known = set(ids.tolist())
    e = g.edge_array
    for a, b in e.tolist():
        if a == b:
            out.append(Violation("self-loop", a))
        for end in (a, b):
            if end not in known:
                out.append(Violation("dangling-edge", end))
    if g.root is not None and g.root not in known:
        out.append(Violation("missing-root", g.root))
    if tree and not any(v.kind in ("duplicate-id", "dangling-edge") for v in out):
        out.extend(_tree_violations(g))
    return out


def _tree_violations(g):
    out = []
    idx = {int(i): k for k, i in enumerate(g.ids.tolist())}
    # multiple parents: a node targeted by both a parent link and extra edges
    n_in = np.zeros(g.node_count, dtype=np.int64)
    for _, b in g.edge_array.tolist():
        n_in[idx[b]] += 1
    for k in np.flatnonzero(n_in > 1):
        out.append(Violation("multiple-parents", int(g.ids[k])))
    # cycle detection on the undirected structure via union-find
    parent = list(range(g.node_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    seen = set()
    for a, b in g.edge_array.tolist():
        key = (min(a, b), max(a, b))
        if key in seen:
            out.append(Violation("cycle", key))
            continue
        seen.add(key)
        ra, rb = find(idx[a]), find(idx[b])
        if ra == rb:
            out.append(Violation("cycle", key))
        else:
            parent[ra] = rb
    return out


def largest_connected_component(g: VesselGraph) -> VesselGraph:
    """Induced subgraph on the largest undirected component.

    Ties go to the component holding the smallest node id.
    """
    if g.node_count == 0:
        return g
    return g.subgraph(largest_component_mask(g))


def largest_component_mask(g: VesselGraph, labels=None) -> np.ndarray:
    if labels is None:
        _, labels = g.component_labels()
    sizes = np.bincount(labels)
    best = np.flatnonzero(sizes == sizes.max())
    if best.size == 1:
        return labels == best[0]
    # tie-break on smallest contained id
    min_id = np.full(sizes.size, np.iinfo(np.int64).max)
    np.minimum.at(min_id, labels, g.ids)
    winner = best[np.argmin(min_id[best])]
    return labels == winner


def max_radius(g: VesselGraph) -> float:
    if g.node_count == 0:
        raise EmptyGraphError("empty-graph")
    return float(g.r.max())
