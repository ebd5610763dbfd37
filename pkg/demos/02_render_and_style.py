"""
Rendering and OCTA-like styling
===============================

Rasterize a tree as anti-aliased capsules, build a small volume, and apply
the procedural style (capillary texture, gamma, speckle). Images land in
``demo_out/`` as PGM files.
"""

from pathlib import Path

import numpy as np

from vesselseg import StyleParams, apply_octa_style, render_enface, render_mask, render_volume
from vesselseg import ScaParams, synthesize
from vesselseg.io import image_stats, write_mask_pgm, write_pgm, write_volume
from vesselseg.raster import max_projection

out = Path("demo_out")
out.mkdir(exist_ok=True)

g = synthesize(ScaParams(target_nodes=5000, seed=2))
size = 512
ps = g.fov_mm / size

img = render_enface(g, size, size, ps)
mask = render_mask(g, size, size, ps)
write_pgm(out / "enface.pgm", img.data, bits=16)
write_mask_pgm(out / "mask.pgm", mask)
print("vessel pixels:", mask.count, "of", size * size)

# same seed, same image; change the seed to change only the noise
styled = apply_octa_style(img, StyleParams(seed=2))
write_pgm(out / "styled.pgm", styled.data)
s = image_stats(styled, mask)
print(f"styled: inside {s['mean_inside']:.3f}  outside {s['mean_outside']:.3f}")

# a coarse volume of the tree flattened onto the middle of slice 3: its
# max projection reproduces the en-face render of the same flat tree
vs = g.fov_mm / 128
flat = g.replace(xyz=np.c_[g.xyz[:, :2], np.full(g.node_count, 3.5 * vs)])
vol = render_volume(flat, (128, 128, 8), vs)
write_volume(out / "volume.raw", vol)
en = render_enface(flat, 128, 128, vs)
print("volume", vol.data.shape, " max |MIP - en face|:",
      float(np.abs(max_projection(vol).data - en.data).max()))
