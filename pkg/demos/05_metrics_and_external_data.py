"""
Metrics and external image pairs
================================

IoU, Dice, SSIM and MSE on generated data, then the same on an image/mask
pair read from disk the way a third-party OCTA export would be.
"""

from pathlib import Path

import numpy as np

from vesselseg import ScaParams, StyleParams, apply_octa_style, evaluate, render_enface, synthesize
from vesselseg.io import DatasetPair, ingest_external, write_mask_pgm, write_pgm
from vesselseg.metrics import dice_from_iou
from vesselseg.raster import binarize

g = synthesize(ScaParams(target_nodes=3000, seed=5))
img = render_enface(g, 304, 304, g.fov_mm / 304)
noisy = apply_octa_style(img, StyleParams(background_capillary_density=0, contrast_gamma=1,
                                          speckle_sigma=0.05, seed=5))
rep = evaluate(binarize(noisy), binarize(img), img, noisy)
print(rep.as_dict())
print("Dice from IoU:", dice_from_iou(rep.iou), "vs", rep.dice)

# round-trip through files: 8-bit image, {0,255} mask, 304 x 304 like ROSE
out = Path("demo_out")
out.mkdir(exist_ok=True)
write_pgm(out / "ext_image.pgm", noisy.data)
write_mask_pgm(out / "ext_mask.pgm", binarize(img))
image, mask = ingest_external(DatasetPair(str(out / "ext_image.pgm"), str(out / "ext_mask.pgm")))
print("ingested", image.data.shape, "pixel size", image.pixel_size, "mm")
print("values in mask:", np.unique(mask.data))
