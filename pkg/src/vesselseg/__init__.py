"""Vessel tree synthesis, radius-threshold main-vessel extraction and
evaluation for OCTA-style images."""

from .graph import (VesselEdge, VesselGraph, VesselNode, largest_connected_component,
                    max_radius, validate)
from .losses import (LossBreakdown, LossWeights, gradient_norm, gradient_penalty,
                     seg_consistency_loss, toy_adversarial_fit, total_loss,
                     wasserstein_loss)
from .metrics import MetricsReport, dice, evaluate, iou, mse, ssim
from .raster import (Mask, RasterImage2D, StyleParams, Volume3D, apply_octa_style,
                     render_enface, render_mask, render_volume)
from .segment import (MainVesselResult, SegmentorParams, build_edges, extract_main,
                      filter_by_radius, main_vessel_mask, select_root)
from .synthesis import (AttractorCloud, RadiusParams, ScaParams, assign_radii, grow,
                        sample_attractors, synthesize)

__version__ = "0.1.0"
