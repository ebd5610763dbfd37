"""
Growing a vessel tree
=====================

Scatter attraction points in a thin slab, grow a tree toward them, then
assign radii bottom-up so every branch point conserves r**gamma.
"""

import numpy as np

from vesselseg import RadiusParams, ScaParams, synthesize
from vesselseg.synthesis import murray_violation

# 5000 nodes over a 3 x 3 x 0.3 mm field, seeded
g = synthesize(ScaParams(target_nodes=5000, seed=1), RadiusParams(gamma=3.0, r_leaf=0.004))
print(f"{g.node_count} nodes, root {g.root}, r_max {g.r.max():.4f} mm")

# the root carries the largest radius, leaves carry r_leaf
children = np.bincount(g.parent[g.parent >= 0], minlength=g.node_count)
print("leaves:", int(np.sum(children == 0)), " leaf radius:", np.unique(g.r[children == 0]))

# conservation at every branch point, up to rounding
print("max relative violation:", murray_violation(g, 3.0))

# radius distribution: a few thick trunks, many thin capillaries
for ratio in (0.1, 0.2, 0.5):
    frac = np.mean(g.r >= ratio * g.r.max())
    print(f"nodes with r >= {ratio:.1f} r_max: {100 * frac:5.1f}%")
