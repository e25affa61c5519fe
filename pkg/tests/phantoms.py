from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from voxpost.volume_io import Mask, Volume


def random_volume(rng, shape=(8, 8, 8), lo=0.0, hi=1.0) -> Volume:
    return Volume(rng.uniform(lo, hi, size=shape).astype(np.float64))


def smooth_phantom(shape=(64, 64, 64), seed=0) -> Volume:
    """Band-limited synthetic scan: a few random low-frequency sinusoids on a
    positive baseline, plus a soft central bump."""
    rng = np.random.default_rng(seed)
    nx, ny, nz = shape
    x, y, z = np.meshgrid(np.linspace(0, 1, nx), np.linspace(0, 1, ny),
                          np.linspace(0, 1, nz), indexing="ij")
    data = np.full(shape, 0.5)
    for _ in range(4):
        fx, fy, fz = rng.uniform(0.5, 3.0, size=3)
        ph = rng.uniform(0, 2 * np.pi, size=3)
        amp = rng.uniform(0.05, 0.15)
        data += amp * np.sin(2 * np.pi * (fx * x + ph[0])) \
                    * np.sin(2 * np.pi * (fy * y + ph[1])) \
                    * np.sin(2 * np.pi * (fz * z + ph[2]))
    r2 = (x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2
    data += 0.3 * np.exp(-r2 / 0.05)
    return Volume(np.clip(data, 0.0, None))


def sphere_mask(shape=(64, 64, 64), radius_frac=0.25) -> Mask:
    nx, ny, nz = shape
    x, y, z = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                          indexing="ij")
    r2 = ((x - nx / 2) ** 2 + (y - ny / 2) ** 2 + (z - nz / 2) ** 2)
    rad = radius_frac * min(shape)
    return Mask((r2 <= rad * rad).astype(np.uint8))


def random_mask(rng, shape=(8, 8, 8), p=0.5) -> Mask:
    return Mask((rng.random(shape) < p).astype(np.uint8))
