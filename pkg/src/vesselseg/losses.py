"""Refinement objective as plain numerics: Wasserstein critic gap, gradient
penalty with finite-difference gradients, mask consistency and the weighted
total.

Critics are opaque callables ``f(x: ndarray) -> float``; nothing here needs
an autodiff engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import ShapeMismatchError


class EmptyBatchError(ValueError):
    pass


class NonFiniteCriticError(ValueError):
    pass


@dataclass(frozen=True)
class LossWeights:
    """``lambda_gp`` and ``lambda_seg`` weight the total; ``lam`` scales the
    penalty itself, so the effective penalty weight is ``lam * lambda_gp``."""

    lambda_gp: float = 1.0
    lambda_seg: float = 1.0
    lam: float = 10.0

    def __post_init__(self):
        if min(self.lambda_gp, self.lambda_seg, self.lam) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    l_gan: float
    l_gp: float
    l_seg: float
    l_total: float
    weights: LossWeights = LossWeights()


@dataclass(frozen=True)
class AffineCritic:
    """``D(x) = a . x + b``; its gradient is ``a`` everywhere."""

    a: np.ndarray
    b: float = 0.0

    def __call__(self, x):
        return float(np.dot(self.a, np.asarray(x, dtype=np.float64)) + self.b)


def wasserstein_loss(real_scores, fake_scores) -> float:
    """Mean critic score on real samples minus mean on generated ones."""
    real = np.asarray(real_scores, dtype=np.float64).ravel()
    fake = np.asarray(fake_scores, dtype=np.float64).ravel()
    if real.size == 0 or fake.size == 0:
        raise EmptyBatchError("empty-batch")
    return float(real.mean()) - float(fake.mean())


def fd_gradient(critic, x, fd_step=1e-4) -> np.ndarray:
    """Central-difference gradient of ``critic`` at ``x``.

    Divides by the probe spacing actually realized in floating point rather
    than ``2 * fd_step``, which removes the step's own rounding error.
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(x, dtype=np.float64).ravel()
    grad = np.empty_like(x)
    probe = x.copy()
    for i in range(x.size):
        hi, lo = x[i] + fd_step, x[i] - fd_step
        probe[i] = hi
        up = critic(probe)
        probe[i] = lo
        down = critic(probe)
        probe[i] = x[i]
        if not (math.isfinite(up) and math.isfinite(down)):
            raise NonFiniteCriticError("non-finite-critic")
        grad[i] = (up - down) / (hi - lo)
    return grad


def gradient_norm(critic, x_hat, fd_step=1e-4) -> float:
    return float(np.linalg.norm(fd_gradient(critic, x_hat, fd_step)))


def gradient_penalty(critic, x_hat_batch, lam=10.0, fd_step=1e-4) -> float:
    """``lam * mean((||grad D(x_hat)|| - 1) ** 2)`` over the batch."""
    batch = [np.asarray(x, dtype=np.float64) for x in x_hat_batch]
    if not batch:
        raise EmptyBatchError("empty-batch")
    if lam == 0:
        return 0.0
    dev = [(gradient_norm(critic, x, fd_step) - 1.0) ** 2 for x in batch]
    return float(lam * np.mean(dev))


def interpolate(real, fake, rng=None, seed=0) -> np.ndarray:
    """Uniform convex combinations of paired real/fake vectors."""
    real = np.atleast_2d(np.asarray(real, dtype=np.float64))
    fake = np.atleast_2d(np.asarray(fake, dtype=np.float64))
    if real.shape != fake.shape:
        raise ShapeMismatchError("shape-mismatch")
    rng = np.random.default_rng(seed) if rng is None else rng
    t = rng.random((real.shape[0], 1))
    return t * real + (1.0 - t) * fake


def seg_consistency_loss(mask_a, mask_b) -> float:
    """Mean absolute per-pixel difference between two (soft) masks."""
    a = np.asarray(getattr(mask_a, "data", mask_a), dtype=np.float64)
    b = np.asarray(getattr(mask_b, "data", mask_b), dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError("shape-mismatch")
    if a.size == 0:
        return 0.0
    return float(np.mean(np.abs(a - b)))


def total_loss(l_gan, l_gp, l_seg, weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Weighted total. ``l_gp`` is the already-scaled penalty."""
    vals = (l_gan, l_gp, l_seg)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("loss components must be finite")
    total = l_gan + weights.lambda_gp * l_gp + weights.lambda_seg * l_seg
    return LossBreakdown(float(l_gan), float(l_gp), float(l_seg), float(total), weights)


def image_features(img, threshold=0.5) -> np.ndarray:
    """Two-number summary of an image: mean intensity and vessel-pixel fraction."""
    x = np.asarray(getattr(img, "data", img), dtype=np.float64)
    return np.array([x.mean(), (x >= threshold).mean()])


def toy_adversarial_fit(real_feats, fake_feats, steps=100, learning_rate=0.01,
                        weights: LossWeights = LossWeights(), fd_step=1e-4, seed=0):
    """Train an affine critic by gradient ascent on gap minus penalty.

    The critic starts at zero. Each step evaluates the breakdown for the
    current critic, then moves its weights along
    ``d(gap)/da - lam * d(penalty)/da``. The gap only depends on the weight
    vector, so the bias stays zero. Returns ``steps + 1`` breakdowns; entry
    ``k`` describes the critic after ``k`` updates.

    Keep ``2 * lam * learning_rate < 1`` for a monotone gap.
    """
    real = np.atleast_2d(np.asarray(real_feats, dtype=np.float64))
    fake = np.atleast_2d(np.asarray(fake_feats, dtype=np.float64))
    if real.size == 0 or fake.size == 0:
        raise EmptyBatchError("empty-batch")
    n = min(len(real), len(fake))
    x_hat = interpolate(real[:n], fake[:n], seed=seed)
    gap_dir = real.mean(axis=0) - fake.mean(axis=0)
    a = np.zeros(real.shape[1])
    trace = []
    for k in range(steps + 1):
        critic = AffineCritic(a.copy())
        l_gan = wasserstein_loss([critic(x) for x in real], [critic(x) for x in fake])
        l_gp = gradient_penalty(critic, x_hat, weights.lam, fd_step)
        trace.append(total_loss(l_gan, l_gp, 0.0, weights))
        if k == steps:
            break
        norm = np.linalg.norm(a)
        # d/da of lam * (||a|| - 1)^2; zero at a == 0 where ||a|| is not differentiable
        pen = 2.0 * weights.lam * (norm - 1.0) * a / norm if norm > 0 else np.zeros_like(a)
        a = a + learning_rate * (gap_dir - weights.lambda_gp * pen)
    return trace
