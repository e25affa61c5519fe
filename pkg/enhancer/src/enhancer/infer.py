"""Sliding-window inference over full volumes with exact out-of-mask identity."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from voxpost.volume_io import read_mask, read_volume, write_volume

from .errors import DimensionMismatch, ModelLoadError
from .model import TinyUNet3D


def load_model(path) -> tuple[TinyUNet3D, tuple[int, int, int]]:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
        model = TinyUNet3D(blob["base_channels"])
        model.load_state_dict(blob["state_dict"])
    except Exception as e:
        raise ModelLoadError(f"cannot load model {path}: {e}") from e
    model.eval()
    return model, tuple(blob.get("patch_size", (32, 32, 32)))


def _positions(dim: int, patch: int, stride: int) -> list[int]:
    if dim <= patch:
        return [0]
    pos = list(range(0, dim - patch + 1, stride))
    if pos[-1] != dim - patch:
        pos.append(dim - patch)
    return pos


def predict_volume(model: TinyUNet3D, data: np.ndarray,
                   patch: tuple[int, int, int]) -> np.ndarray:
    """Patch-wise prediction with half-stride overlap averaging."""
    shape = data.shape
    p = [min(ps - ps % 2, s - s % 2) if s < ps else ps
         for ps, s in zip(patch, shape)]
    acc = np.zeros(shape, dtype=np.float64)
    cnt = np.zeros(shape, dtype=np.float64)
    with torch.no_grad():
        for x0 in _positions(shape[0], p[0], max(1, p[0] // 2)):
            for y0 in _positions(shape[1], p[1], max(1, p[1] // 2)):
                for z0 in _positions(shape[2], p[2], max(1, p[2] // 2)):
                    sl = (slice(x0, x0 + p[0]), slice(y0, y0 + p[1]),
                          slice(z0, z0 + p[2]))
                    tile = torch.from_numpy(
                        np.ascontiguousarray(data[sl])[None, None]).float()
                    acc[sl] += model(tile).numpy()[0, 0].astype(np.float64)
                    cnt[sl] += 1.0
    return acc / cnt


def enhance(volume_path, mask_path, model_path, out_path) -> Path:
    """Enhance a volume inside the mask; outside voxels are copied bit-exact."""
    v = read_volume(volume_path)
    m = read_mask(mask_path)
    if v.dims != m.dims:
        raise DimensionMismatch(f"volume dims {v.dims} != mask dims {m.dims}")
    model, patch = load_model(model_path)

    lo, hi = float(v.data.min()), float(v.data.max())
    scale = hi - lo if hi > lo else 1.0
    norm = (v.data - lo) / scale
    pred = predict_volume(model, norm, patch) * scale + lo

    out = v.with_data(np.where(m.bool, pred, v.data))
    write_volume(out, out_path)
    return Path(out_path)
