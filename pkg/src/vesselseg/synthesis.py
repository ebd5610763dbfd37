"""Space colonization growth of vessel trees and Murray-style radius assignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .graph import NO_PARENT, VesselGraph

DEFAULT_DOMAIN = ((0.0, 0.0, 0.0), (3.0, 3.0, 0.3))


class DegenerateDomainError(ValueError):
    pass


class NotATreeError(ValueError):
    pass


@dataclass(frozen=True)
class AttractorCloud:
    points: np.ndarray
    seed: int

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ScaParams:
    """Space colonization settings, all lengths in millimeters.

    ``attractor_count`` and ``root_position`` complete what
    :func:`synthesize` needs; ``root_position=None`` places the seed at the
    middle of the domain's low-x face, where the optic disc sits relative to
    a macula-centered scan.
    """

    influence_radius: float = 0.3
    kill_distance: float = 0.03
    step_length: float = 0.015
    max_iterations: int = 2000
    target_nodes: int = 5000
    domain: tuple = DEFAULT_DOMAIN
    seed: int = 0
    attractor_count: int = 2500
    root_position: tuple | None = None

    def __post_init__(self):
        if not 0 < self.kill_distance < self.influence_radius:
            raise ValueError(
                f"need 0 < kill_distance < influence_radius, got "
                f"{self.kill_distance} and {self.influence_radius}"
            )
        if not self.step_length > 0:
            raise ValueError("step_length must be positive")
        if self.target_nodes < 1:
            raise ValueError("target_nodes must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.attractor_count < 1:
            raise ValueError("attractor_count must be >= 1")

    def seed_position(self):
        if self.root_position is not None:
            return np.asarray(self.root_position, dtype=np.float64)
        lo, hi = np.asarray(self.domain, dtype=np.float64)
        return np.array([lo[0], (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2])


@dataclass(frozen=True)
class RadiusParams:
    gamma: float = 3.0
    r_leaf: float = 0.004

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.r_leaf > 0:
            raise ValueError("r_leaf must be positive")


def sample_attractors(domain, count, seed) -> AttractorCloud:
    """Uniform attraction points inside an axis-aligned box ``(lo, hi)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    lo, hi = np.asarray(domain, dtype=np.float64)
    if np.any(hi - lo <= 0):
        raise DegenerateDomainError("degenerate-domain")
    rng = np.random.default_rng(seed)
    pts = lo + rng.random((count, 3)) * (hi - lo)
    return AttractorCloud(pts, seed)


@dataclass
class GrowthLog:
    """Per-iteration bookkeeping of a :func:`grow` run."""

    remaining: list = field(default_factory=list)
    new_nodes: list = field(default_factory=list)


def grow(params: ScaParams, attractors, seed_position=None, r_placeholder=0.004,
         log: GrowthLog | None = None) -> VesselGraph:
    """Grow a tree toward attraction points.

    Every iteration removes attractors within ``kill_distance`` of any node,
    binds each survivor to its closest node within ``influence_radius``, and
    gives every bound node one child ``step_length`` along the normalized
    mean direction to its attractors. Nodes with no bound attractor stay
    idle. Growth ends at ``target_nodes``, ``max_iterations`` or when the
    attractors run out.
    """
    pts = attractors.points if isinstance(attractors, AttractorCloud) else np.asarray(attractors)
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("need at least one attractor")
    start = params.seed_position() if seed_position is None else np.asarray(seed_position, float)

    cap = params.target_nodes
    xyz = np.empty((cap, 3))
    parent = np.full(cap, NO_PARENT, dtype=np.int64)
    last_child = np.full((cap, 3), np.nan)
    xyz[0] = start
    n = 1
    alive = pts
    # nodes are never removed, so each attractor's closest node within reach
    # only changes when a newer node beats it; querying just the nodes added
    # last iteration keeps the bookkeeping exact
    best_d = np.full(len(alive), np.inf)
    best_i = np.zeros(len(alive), dtype=np.int64)
    fresh = 0

    for _ in range(params.max_iterations):
        if n >= cap or len(alive) == 0:
            break
        d, i = cKDTree(xyz[fresh:n]).query(
            alive, k=1, distance_upper_bound=params.influence_radius
        )
        closer = d < best_d
        best_d[closer] = d[closer]
        best_i[closer] = i[closer] + fresh
        fresh = n
        live = best_d > params.kill_distance
        alive, best_d, best_i = alive[live], best_d[live], best_i[live]
        if log is not None:
            log.remaining.append(len(alive))
        bound = np.isfinite(best_d)
        if not bound.any():
            break
        owner = best_i[bound]
        vec = alive[bound] - xyz[owner]
        vec /= np.linalg.norm(vec, axis=1, keepdims=True)
        order = np.argsort(owner, kind="stable")
        owner, vec = owner[order], vec[order]
        rows, starts = np.unique(owner, return_index=True)
        sums = np.add.reduceat(vec, starts, axis=0)
        norms = np.linalg.norm(sums, axis=1)
        ok = norms > 1e-12
        rows, sums, norms = rows[ok], sums[ok], norms[ok]
        new_pos = xyz[rows] + params.step_length * sums / norms[:, None]
        # a node bound to the same attractors as last time would sprout a
        # duplicate child; drop those to keep the tree free of stacked nodes
        keep = ~np.all(np.abs(last_child[rows] - new_pos) < 1e-12, axis=1)
        rows, new_pos = rows[keep], new_pos[keep]
        if len(rows) == 0:
            break
        take = min(len(rows), cap - n)
        rows, new_pos = rows[:take], new_pos[:take]
        xyz[n:n + take] = new_pos
        parent[n:n + take] = rows
        last_child[rows] = new_pos
        if log is not None:
            log.new_nodes.append(take)
        n += take

    ids = np.arange(n)
    return VesselGraph(ids, xyz[:n], np.full(n, r_placeholder), parent[:n],
                       root=0, fov_mm=_fov(params.domain))


def _fov(domain):
    lo, hi = np.asarray(domain, dtype=np.float64)
    return float(max(hi[0] - lo[0], hi[1] - lo[1]))


def topological_order(g: VesselGraph) -> np.ndarray:
    """Row indices with every parent before its children.

    Raises :class:`NotATreeError` if the parent links contain a cycle, a
    dangling parent, or if the graph carries extra (non-tree) edges.
    """
    if g.extra_edges.size:
        raise NotATreeError("not-a-tree: graph has non-tree edges")
    has = g.parent != NO_PARENT
    if has.any() and not g.contains(g.parent[has]).all():
        raise NotATreeError("not-a-tree: dangling parent link")
    kids = g.children_index()
    order = []
    stack = np.flatnonzero(~has).tolist()[::-1]
    while stack:
        k = stack.pop()
        order.append(k)
        stack.extend(reversed(kids[k]))
    if len(order) != g.node_count:
        raise NotATreeError("not-a-tree: parent links contain a cycle")
    return np.asarray(order, dtype=np.int64)


def assign_radii(g: VesselGraph, rp: RadiusParams) -> VesselGraph:
    """Leaves get ``r_leaf``; each internal node gets
    ``r = (sum of child r**gamma) ** (1/gamma)``, evaluated leaf to root."""
    order = topological_order(g)
    n = g.node_count
    # r**gamma is additive, so accumulate the leaf mass then take one root
    # per node; each leaf contributes r_leaf**gamma
    mass = np.zeros(n)
    has = g.parent != NO_PARENT
    pidx = np.full(n, -1, dtype=np.int64)
    if has.any():
        pidx[has] = g.index_of(g.parent[has])
    n_kids = np.bincount(pidx[has], minlength=n) if has.any() else np.zeros(n, int)
    leaf_mass = rp.r_leaf ** rp.gamma
    mass[n_kids == 0] = leaf_mass
    for k in order[::-1].tolist():
        p = pidx[k]
        if p >= 0:
            mass[p] += mass[k]
    r = mass ** (1.0 / rp.gamma)
    r[n_kids == 0] = rp.r_leaf
    return g.replace(r=r)


def synthesize(sca: ScaParams, rp: RadiusParams = RadiusParams()) -> VesselGraph:
    """Sample attractors, grow a tree from the seed, assign radii."""
    cloud = sample_attractors(sca.domain, sca.attractor_count, sca.seed)
    g = grow(sca, cloud, r_placeholder=rp.r_leaf)
    return assign_radii(g, rp)


def murray_violation(g: VesselGraph, gamma: float) -> float:
    """Largest relative violation of ``r_parent**gamma == sum(r_child**gamma)``."""
    kids = g.children_index()
    worst = 0.0
    for k, ch in enumerate(kids):
        if not ch:
            continue
        lhs = g.r[k] ** gamma
        rhs = float(np.sum(g.r[ch] ** gamma))
        worst = max(worst, abs(lhs - rhs) / lhs)
    return worst
