"""
Refinement objective without a network
======================================

Critic gap, gradient penalty from finite differences, mask consistency and
the weighted total. A two-feature affine critic is then trained on rendered
versus styled images.
"""

import numpy as np

from vesselseg import (LossWeights, ScaParams, StyleParams, apply_octa_style, gradient_penalty,
                       render_enface, seg_consistency_loss, synthesize, toy_adversarial_fit,
                       total_loss, wasserstein_loss)
from vesselseg.losses import AffineCritic, image_features
from vesselseg.raster import binarize

critic = AffineCritic(np.array([3.0, 4.0]))
print("gap:", wasserstein_loss([2, 4], [1, 1]))
print("penalty, |a| = 5:", gradient_penalty(critic, np.random.default_rng(0).random((4, 2))))

# features of plain renders (real) and styled renders (generated)
real, fake, l_seg = [], [], []
for seed in range(12):
    g = synthesize(ScaParams(target_nodes=800, seed=seed))
    img = render_enface(g, 128, 128, g.fov_mm / 128)
    styled = apply_octa_style(img, StyleParams(seed=seed))
    real.append(image_features(img))
    fake.append(image_features(styled))
    l_seg.append(seg_consistency_loss(binarize(styled), binarize(img)))

trace = toy_adversarial_fit(real, fake, steps=200, learning_rate=0.02)
for k in (0, 50, 100, 200):
    print(f"step {k:3d}  gap {trace[k].l_gan:.5f}  penalty {trace[k].l_gp:.3f}")

# fold the mask consistency term into the last step's breakdown
last = trace[-1]
br = total_loss(last.l_gan, last.l_gp, float(np.mean(l_seg)), LossWeights(lambda_gp=1.0))
print(f"total {br.l_total:.5f} = {br.l_gan:.5f} + {br.l_gp:.5f} + {br.l_seg:.5f}")
