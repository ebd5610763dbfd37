"""Ablation sweeps over the radius ratio and node count, and segmentation timing."""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass, replace

import numpy as np

from .graph import NO_PARENT, VesselGraph
from .metrics import dice, iou
from .raster import render_mask
from .segment import SegmentorParams, extract_main
from .synthesis import RadiusParams, ScaParams, synthesize, topological_order

RMIN_GRID = (0.0, 0.1, 0.2, 0.3, 0.5, 1.0)


@dataclass
class SweepRow:
    value: float
    iou: float
    dice: float
    kept_fraction: float
    runtime_us: float
    nodes: int = 0


@dataclass
class TimingStats:
    reps: int
    min_us: float
    median_us: float
    p95_us: float
    nodes: int
    edges: int
    parameters: int = 0
    node_visits: int = 0


def main_truth(g: VesselGraph, ratio=0.2) -> VesselGraph:
    """Synthesis-time main vessels: nodes whose whole path to the root keeps
    ``r >= ratio * r_max``."""
    order = topological_order(g)
    thr = ratio * g.r.max()
    ok = g.r >= thr
    good = np.zeros(g.node_count, dtype=bool)
    has = g.parent != NO_PARENT
    pidx = np.full(g.node_count, -1, dtype=np.int64)
    pidx[has] = g.index_of(g.parent[has])
    root_row = None if g.root is None else int(g.index_of([g.root])[0])
    for k in order.tolist():
        p = pidx[k]
        if p < 0:
            good[k] = ok[k] and (root_row is None or k == root_row)
        else:
            good[k] = ok[k] and good[p]
    return g.subgraph(good)


def _raster_args(g, width, height, pixel_size):
    if pixel_size is None:
        pixel_size = g.fov_mm / max(width, height)
    return width, height, pixel_size


def score_main(g_main: VesselGraph, gt_main: VesselGraph, width=512, height=512,
               pixel_size=None, threshold=0.5):
    """IoU and Dice of two graphs rasterized with identical settings."""
    w, h, ps = _raster_args(gt_main, width, height, pixel_size)
    pred = render_mask(g_main, w, h, ps, threshold)
    gt = render_mask(gt_main, w, h, ps, threshold)
    return iou(pred, gt), dice(pred, gt)


def sweep_rmin(g: VesselGraph, gt_main: VesselGraph, values=RMIN_GRID, width=512,
               height=512, pixel_size=None, params: SegmentorParams = SegmentorParams()):
    rows = []
    if pixel_size is None:
        pixel_size = g.fov_mm / max(width, height)
    for v in values:
        t0 = time.perf_counter()
        res = extract_main(g, replace(params, r_min_ratio=float(v)))
        dt = (time.perf_counter() - t0) * 1e6
        j, d = score_main(res.g_main, gt_main, width, height, pixel_size)
        rows.append(SweepRow(float(v), j, d, res.kept_nodes / g.node_count, dt, g.node_count))
    return rows


def sweep_nodes(sca: ScaParams, rp: RadiusParams, n_values, r_min=0.2, truth_ratio=0.2,
                width=512, height=512):
    """Synthesize at each node count from the same seed, segment and score
    against that graph's own main-vessel truth."""
    if list(n_values) != sorted(n_values):
        raise ValueError("n_values must be ascending")
    rows = []
    for n in n_values:
        g = synthesize(replace(sca, target_nodes=int(n)), rp)
        gt = main_truth(g, truth_ratio)
        t0 = time.perf_counter()
        res = extract_main(g, SegmentorParams(r_min_ratio=r_min))
        dt = (time.perf_counter() - t0) * 1e6
        j, d = score_main(res.g_main, gt, width, height)
        rows.append(SweepRow(float(n), j, d, res.kept_nodes / g.node_count, dt, g.node_count))
    return rows


def time_segmentation(g: VesselGraph, params: SegmentorParams = SegmentorParams(),
                      reps=100, warmup=3) -> TimingStats:
    """Wall-clock ``extract_main`` timing; garbage collection paused, warm-up
    runs discarded."""
    if reps < 10:
        raise ValueError("reps must be >= 10")
    for _ in range(warmup):
        res = extract_main(g, params)
    samples = np.empty(reps)
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for k in range(reps):
            t0 = time.perf_counter_ns()
            res = extract_main(g, params)
            samples[k] = (time.perf_counter_ns() - t0) / 1e3
    finally:
        if was_enabled:
            gc.enable()
    return TimingStats(
        reps, float(samples.min()), float(np.median(samples)),
        float(np.percentile(samples, 95)), g.node_count, len(g.edge_array),
        parameters=0, node_visits=res.kept_nodes,
    )


def timing_graph(n, seed=0, rp: RadiusParams = RadiusParams()) -> VesselGraph:
    """A synthesized tree of ``n`` nodes. Above 10^4 nodes the attractor
    density grows with ``n`` and the lengths shrink so growth fills the
    default field instead of stalling."""
    scale = max(n / 10_000, 1.0)
    k = scale ** 0.5
    sca = ScaParams(
        target_nodes=n, seed=seed, attractor_count=int(2500 * scale),
        step_length=0.015 / k, kill_distance=0.03 / k, influence_radius=0.3 / k,
        max_iterations=20_000,
    )
    return synthesize(sca, rp)


def long_format(rows, param):
    """Rows reshaped to ``(param, value, metric, score)`` records for plotting."""
    out = []
    for row in rows:
        for metric in ("iou", "dice", "kept_fraction", "runtime_us"):
            out.append({"param": param, "value": row.value, "metric": metric,
                        "score": getattr(row, metric)})
    return out
