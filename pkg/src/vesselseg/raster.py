"""Capsule rendering of vessel graphs into en-face images, volumes and masks.

Pixel ``(row i, col j)`` covers world ``x in [j*ps, (j+1)*ps)`` and
``y in [i*ps, (i+1)*ps)``; intensities are evaluated at pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .graph import VesselGraph

AA_BAND = 1.0  # anti-alias band width, in pixels


@dataclass(frozen=True, eq=False)
class RasterImage2D:
    data: np.ndarray  # (height, width) float64 in [0, 1]
    pixel_size: float = 1.0

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class Volume3D:
    data: np.ndarray  # (depth, height, width) float64 in [0, 1]
    voxel_size: tuple = (1.0, 1.0, 1.0)  # (x, y, z) mm

    @property
    def dims(self):
        d, h, w = self.data.shape
        return (w, h, d)


@dataclass(frozen=True, eq=False)
class Mask:
    data: np.ndarray  # (height, width) uint8 in {0, 1}

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def count(self):
        return int(self.data.sum())


@dataclass(frozen=True)
class StyleParams:
    vessel_gain: float = 1.0
    background_capillary_density: float = 0.35
    speckle_sigma: float = 0.03
    contrast_gamma: float = 0.7
    seed: int = 0
    texture_scale: float = 1.5  # pixels, width of the noise band-limit

    def __post_init__(self):
        if self.speckle_sigma < 0:
            raise ValueError("speckle_sigma must be >= 0")
        if not self.contrast_gamma > 0:
            raise ValueError("contrast_gamma must be positive")
        if not 0 <= self.background_capillary_density <= 1:
            raise ValueError("background_capillary_density must lie in [0, 1]")


def _falloff(s):
    """1 inside the surface (s <= 0), 0 beyond the band, smoothstep between."""
    t = np.clip(s / AA_BAND, 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)


def _segments(g: VesselGraph):
    e = g.edge_index_pairs()
    if e.size:
        # paired directed edges render the same capsule twice; dedupe
        e = np.unique(np.sort(e, axis=1), axis=0)
    return e


def _capsule_field(p, a, b, ra, rb):
    """Distance from points ``p`` (..., D) to the surface of capsules a->b.

    ``a``, ``b``, ``ra``, ``rb`` broadcast against ``p``'s leading axes.
    Radius varies linearly along the axis.
    """
    ab = b - a
    ap = p - a
    den = np.sum(ab * ab, axis=-1)
    safe = np.where(den > 0, den, 1.0)
    t = np.where(den > 0, np.sum(ap * ab, axis=-1) / safe, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    d = np.sqrt(np.sum((p - closest) ** 2, axis=-1))
    return d - (ra + (rb - ra) * t)


def _render(shape, pos, rad, segs, singles):
    """Max-composite capsule falloff into an array of ``shape``.

    ``pos`` and ``rad`` are in grid units with cell centers at integer
    coordinates; ``pos[:, k]`` indexes axis ``k`` of ``shape`` reversed
    (x is the last array axis).
    """
    ndim = len(shape)
    out = np.zeros(shape)
    flat = out.reshape(-1)
    a_idx = np.concatenate([segs[:, 0], singles]).astype(np.int64)
    b_idx = np.concatenate([segs[:, 1], singles]).astype(np.int64)
    if a_idx.size == 0:
        return out
    a, b = pos[a_idx], pos[b_idx]
    ra, rb = rad[a_idx], rad[b_idx]
    reach = np.maximum(ra, rb) + AA_BAND
    lo = np.floor(np.minimum(a, b) - reach[:, None]).astype(np.int64)
    hi = np.ceil(np.maximum(a, b) + reach[:, None]).astype(np.int64)
    lim = np.array(shape[::-1])
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, lim - 1)
    ext = hi - lo + 1
    live = np.all(ext > 0, axis=1)
    # bucket by patch extent so each batch is a dense (B, *patch) block
    size = np.where(live, ext.max(axis=1), 0)
    strides = np.cumprod((1,) + tuple(lim[:-1]))  # flat stride per x, y, (z)
    for s in np.unique(size[live]):
        sel = np.flatnonzero(size == s)
        grids = np.meshgrid(*([np.arange(s)] * ndim), indexing="ij")
        offs = np.stack([gr.ravel() for gr in grids], axis=1)  # (P, ndim)
        for chunk in np.array_split(sel, max(1, len(sel) * len(offs) // 2_000_000 + 1)):
            cells = lo[chunk][:, None, :] + offs[None]  # (B, P, ndim)
            inside = np.all(cells <= hi[chunk][:, None, :], axis=2)
            val = _falloff(_capsule_field(
                cells.astype(np.float64),
                a[chunk][:, None], b[chunk][:, None],
                ra[chunk][:, None], rb[chunk][:, None],
            ))
            keep = inside & (val > 0)
            idx = (cells * strides).sum(axis=2)
            np.maximum.at(flat, idx[keep], val[keep])
    return out


def _isolated(g: VesselGraph, segs):
    touched = np.zeros(g.node_count, dtype=bool)
    touched[segs.ravel()] = True
    return np.flatnonzero(~touched)


def render_enface(g: VesselGraph, width, height, pixel_size) -> RasterImage2D:
    """Render ``g`` projected on the xy plane as anti-aliased capsules."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    if g.node_count == 0:
        return RasterImage2D(np.zeros((height, width)), pixel_size)
    segs = _segments(g)
    pos = g.xyz[:, :2] / pixel_size - 0.5
    rad = g.r / pixel_size
    img = _render((height, width), pos, rad, segs, _isolated(g, segs))
    return RasterImage2D(img, pixel_size)


def render_volume(g: VesselGraph, dims, voxel_size) -> Volume3D:
    """3D analogue of :func:`render_enface`; ``dims`` is ``(w, h, d)``.

    Distances are measured in millimeters; the anti-alias band is one
    smallest-voxel-edge wide.
    """
    w, h, d = (int(v) for v in dims)
    if min(w, h, d) < 1:
        raise ValueError("volume dimensions must be >= 1")
    vs = np.broadcast_to(np.asarray(voxel_size, dtype=np.float64), (3,))
    if g.node_count == 0:
        return Volume3D(np.zeros((d, h, w)), tuple(vs))
    unit = vs.min()
    segs = _segments(g)
    # rescale so the smallest voxel edge is one grid unit, then stretch back
    # per axis by sampling at anisotropic cell centers
    scale = vs / unit
    if np.allclose(scale, 1.0):
        pos = g.xyz / unit - 0.5
        vol = _render((d, h, w), pos, g.r / unit, segs, _isolated(g, segs))
    else:
        vol = _render_aniso((d, h, w), g, vs, unit, segs)
    return Volume3D(vol, tuple(vs))


def _render_aniso(shape, g, vs, unit, segs):
    d, h, w = shape
    zz, yy, xx = np.meshgrid(np.arange(d), np.arange(h), np.arange(w), indexing="ij")
    p = np.stack([(xx + 0.5) * vs[0], (yy + 0.5) * vs[1], (zz + 0.5) * vs[2]], axis=-1) / unit
    out = np.zeros(shape)
    pos, rad = g.xyz / unit, g.r / unit
    pairs = np.concatenate([segs, np.repeat(_isolated(g, segs)[:, None], 2, axis=1)])
    for i, j in pairs.tolist():
        val = _falloff(_capsule_field(p, pos[i], pos[j], rad[i], rad[j]))
        np.maximum(out, val, out=out)
    return out


def render_mask(g: VesselGraph, width, height, pixel_size, threshold=0.5) -> Mask:
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    img = render_enface(g, width, height, pixel_size)
    return binarize(img, threshold)


def binarize(img: RasterImage2D, threshold=0.5) -> Mask:
    return Mask((img.data >= threshold).astype(np.uint8))


def max_projection(vol: Volume3D) -> RasterImage2D:
    return RasterImage2D(vol.data.max(axis=0), vol.voxel_size[0])


# -- procedural style --------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(x):
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def hashed_uniform(shape, seed, stream=0):
    """Uniform (0, 1) values from a hash of (seed, stream, flat pixel index)."""
    n = int(np.prod(shape))
    key = np.uint64((seed * 0x9E3779B97F4A7C15 + stream * 0xD1B54A32D192ED03) % 2**64)
    with np.errstate(over="ignore"):
        h = _mix64(np.arange(n, dtype=np.uint64) ^ _mix64(np.array([key]))[0])
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53


def hashed_normal(shape, seed, stream=0):
    u1 = hashed_uniform(shape, seed, 2 * stream + 1)
    u2 = hashed_uniform(shape, seed, 2 * stream + 2)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2 * np.pi * u2)
    return z.reshape(shape)


def capillary_texture(shape, seed, scale=1.5):
    """Band-limited noise in [0, 1] shaped like a dense capillary mesh."""
    noise = hashed_normal(shape, seed, stream=7)
    low = ndimage.gaussian_filter(noise, scale, mode="wrap")
    # ridges of the zero set look like thin interlaced channels
    ridge = np.exp(-(low / (low.std() + 1e-12)) ** 2 * 4.0)
    return ridge


def apply_octa_style(img: RasterImage2D, sp: StyleParams = StyleParams()) -> RasterImage2D:
    """Gain, capillary background, gamma contrast and speckle, clamped to [0, 1]."""
    x = img.data.astype(np.float64, copy=True)
    if sp.vessel_gain != 1.0:
        x = x * sp.vessel_gain
    if sp.background_capillary_density > 0:
        tex = capillary_texture(x.shape, sp.seed, sp.texture_scale)
        x = x + sp.background_capillary_density * tex * np.clip(1.0 - x, 0.0, 1.0)
    x = np.clip(x, 0.0, 1.0)
    if sp.contrast_gamma != 1.0:
        x = x ** sp.contrast_gamma
    if sp.speckle_sigma > 0:
        x = x + sp.speckle_sigma * hashed_normal(x.shape, sp.seed, stream=3)
    return RasterImage2D(np.clip(x, 0.0, 1.0), img.pixel_size)
