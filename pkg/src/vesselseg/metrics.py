"""Segmentation and image-similarity metrics: IoU, Dice, SSIM, MSE.

Masks are compared as boolean arrays, images as float arrays in [0, 1].
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .graph import ShapeMismatchError


def _arr(x, dtype):
    return np.asarray(getattr(x, "data", x), dtype=dtype)


def _pair(a, b, dtype):
    a, b = _arr(a, dtype), _arr(b, dtype)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape-mismatch: {a.shape} vs {b.shape}")
    return a, b


def pixel_counts(a, b) -> dict:
    a, b = _pair(a, b, bool)
    inter = int(np.count_nonzero(a & b))
    na, nb = int(np.count_nonzero(a)), int(np.count_nonzero(b))
    return {
        "intersection": inter,
        "union": na + nb - inter,
        "a_only": na - inter,
        "b_only": nb - inter,
    }


def iou(a, b) -> float:
    """Jaccard index; two empty masks score 1."""
    c = pixel_counts(a, b)
    if c["union"] == 0:
        return 1.0
    return c["intersection"] / c["union"]


def dice(a, b) -> float:
    """``2|A & B| / (|A| + |B|)``; two empty masks score 1."""
    c = pixel_counts(a, b)
    total = 2 * c["intersection"] + c["a_only"] + c["b_only"]
    if total == 0:
        return 1.0
    return 2 * c["intersection"] / total


def dice_from_iou(j):
    return 2.0 * j / (1.0 + j)


def mse(a, b) -> float:
    a, b = _pair(a, b, np.float64)
    return float(np.mean((a - b) ** 2))


def ssim(a, b, window_size=7, k1=0.01, k2=0.03, data_range=1.0) -> float:
    """Mean SSIM over every fully-contained ``window_size`` box window.

    Uses uniform weights and population (biased) window statistics.
    """
    a, b = _pair(a, b, np.float64)
    if a.ndim != 2:
        raise ValueError("ssim expects 2D images")
    if window_size % 2 != 1 or window_size < 1:
        raise ValueError("window_size must be a positive odd integer")
    if window_size > min(a.shape):
        raise ValueError("window larger than image")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def box(x):
        return uniform_filter(x, size=window_size, mode="reflect")

    mu_a, mu_b = box(a), box(b)
    var_a = box(a * a) - mu_a * mu_a
    var_b = box(b * b) - mu_b * mu_b
    cov = box(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    local = np.clip(num / den, -1.0, 1.0)
    pad = (window_size - 1) // 2
    valid = local[pad:local.shape[0] - pad, pad:local.shape[1] - pad]
    return float(valid.mean())


@dataclass
class MetricsReport:
    iou: float
    dice: float
    ssim: float | None
    mse: float | None
    pixel_counts: dict

    def as_dict(self):
        return asdict(self)


def evaluate(pred, gt, img_a=None, img_b=None, window_size=7) -> MetricsReport:
    """All four metrics; SSIM/MSE use the image pair when given."""
    rep = MetricsReport(iou(pred, gt), dice(pred, gt), None, None, pixel_counts(pred, gt))
    if img_a is not None and img_b is not None:
        rep.ssim = ssim(img_a, img_b, window_size)
        rep.mse = mse(img_a, img_b)
    return rep
