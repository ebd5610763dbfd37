"""
Ablations and timing
====================

Sweep the radius ratio and the node count against synthesis-time truth,
then time the segmentor alone. Tables are printed and written as CSV.
"""

from pathlib import Path

from vesselseg.bench import (RMIN_GRID, long_format, main_truth, sweep_nodes, sweep_rmin,
                             time_segmentation, timing_graph)
from vesselseg.io import write_csv
from vesselseg.segment import SegmentorParams
from vesselseg.synthesis import RadiusParams, ScaParams, synthesize

out = Path("demo_out")
out.mkdir(exist_ok=True)

g = synthesize(ScaParams(target_nodes=5000, seed=6))
rows = sweep_rmin(g, main_truth(g, 0.2), RMIN_GRID)
print("rmin   iou     dice    kept")
for r in rows:
    print(f"{r.value:4.1f}  {r.iou:.4f}  {r.dice:.4f}  {r.kept_fraction:.3f}")
write_csv(out / "sweep_rmin_long.csv", long_format(rows, "rmin"),
          ["param", "value", "metric", "score"])

rows = sweep_nodes(ScaParams(seed=6), RadiusParams(), [100, 1000, 10_000])
for r in rows:
    print(f"N={r.nodes:6d}  iou {r.iou:.4f}  kept {r.kept_fraction:.3f}")

# the segmentor has no parameters; time grows linearly with the graph
for n in (10_000, 100_000):
    st = time_segmentation(timing_graph(n), SegmentorParams(r_min_ratio=0.2), reps=20)
    print(f"{n:7d} nodes: median {st.median_us / 1000:.2f} ms, p95 {st.p95_us / 1000:.2f} ms")
