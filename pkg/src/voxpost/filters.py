"""Classical 3D denoising: median filter and separable Gaussian smoothing.

Both filters use mirror (reflect-without-repeat) boundary handling: index -1
maps back to index 1. Zero-padding would darken the brain boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadKernel, DimensionMismatch
from .volume_io import Mask, Volume


@dataclass
class FilterSpec:
    median_kernel: int = 3
    gaussian_sigma: float = 0.5


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian taps over [-r, r], r = max(1, ceil(3*sigma))."""
    r = max(1, int(np.ceil(3.0 * sigma)))
    i = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return w / w.sum()


def median_filter(v: Volume, k: int = 3) -> Volume:
    """Replace each voxel by the median of its k^3 mirror-padded neighborhood."""
    if k < 1 or k % 2 == 0:
        raise BadKernel(f"median kernel must be odd and positive, got {k}")
    if k > 2 * min(v.dims) - 1:
        raise BadKernel(f"kernel {k} exceeds 2*min(dims)-1 for dims {v.dims}")
    if k == 1:
        return v.with_data(v.data.copy())
    out = ndimage.median_filter(v.data, size=k, mode="mirror")
    return v.with_data(out)


def gaussian_smooth(v: Volume, sigma: float) -> Volume:
    """Separable Gaussian blur along x, then y, then z; sigma=0 is identity."""
    if sigma < 0:
        raise BadKernel(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return v.with_data(v.data.copy())
    w = gaussian_kernel_1d(sigma)
    out = v.data
    for axis in range(3):
        out = ndimage.correlate1d(out, w, axis=axis, mode="mirror")
    return v.with_data(out)


def apply_masked(v: Volume, base: Volume, m: Mask, f) -> Volume:
    """Run filter ``f`` on the full volume, then keep ``base`` where mask=0."""
    if v.dims != base.dims or v.dims != m.dims:
        raise DimensionMismatch(
            f"volume {v.dims} / base {base.dims} / mask {m.dims} incongruent")
    filtered = f(v)
    out = np.where(m.bool, filtered.data, base.data)
    return base.with_data(out)
