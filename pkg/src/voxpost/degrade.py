"""Synthetic degradation: seeded Gaussian blurring of healthy-mask regions.

Produces (degraded, ground-truth) training pairs for the enhancement stage.
Sigma draws come from a splitmix64 stream keyed by (seed, case_index,
draw_index), so the same spec regenerates bit-identical datasets anywhere.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoFailure, LayoutError
from .filters import gaussian_smooth
from .volume_io import Mask, Volume, read_mask, read_volume, write_mask, write_volume

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return state, z


def derive_uniform(seed: int, case_index: int, draw_index: int = 0) -> float:
    """Deterministic uniform in [0,1): chain splitmix64 outputs, xoring in
    the case and draw indices between steps."""
    _, z = splitmix64_next(seed & _MASK64)
    _, z = splitmix64_next((z ^ (case_index & _MASK64)) & _MASK64)
    _, z = splitmix64_next((z ^ (draw_index & _MASK64)) & _MASK64)
    return z / 2.0 ** 64


@dataclass
class DegradeSpec:
    sigma_min: float = 0.5
    sigma_max: float = 1.5
    seed: int = 0
    per_case_draws: int = 1

    def validate(self) -> None:
        if not (0 < self.sigma_min <= self.sigma_max):
            raise ValueError(
                f"need 0 < sigma_min <= sigma_max, got [{self.sigma_min}, {self.sigma_max}]")
        if self.per_case_draws < 1:
            raise ValueError("per_case_draws must be >= 1")


def degrade_case(gt: Volume, healthy: Mask, spec: DegradeSpec,
                 case_index: int, draw_index: int = 0) -> tuple[Volume, float]:
    """Blur the full volume with a drawn sigma, keep gt outside the mask."""
    spec.validate()
    if gt.dims != healthy.dims:
        raise DimensionMismatch(f"gt dims {gt.dims} != mask dims {healthy.dims}")
    u = derive_uniform(spec.seed, case_index, draw_index)
    sigma = spec.sigma_min + u * (spec.sigma_max - spec.sigma_min)
    blurred = gaussian_smooth(gt, sigma)
    out = np.where(healthy.bool, blurred.data, gt.data)
    return gt.with_data(out), sigma


def _find_case_files(case_dir: Path) -> tuple[Path, Path]:
    cid = case_dir.name
    gt = mask = None
    for ext in (".nii.gz", ".nii"):
        if gt is None and (case_dir / f"{cid}-t1n{ext}").exists():
            gt = case_dir / f"{cid}-t1n{ext}"
        if mask is None and (case_dir / f"{cid}-healthy-mask{ext}").exists():
            mask = case_dir / f"{cid}-healthy-mask{ext}"
    if gt is None or mask is None:
        raise LayoutError(
            f"{case_dir}: expected {cid}-t1n.nii[.gz] and {cid}-healthy-mask.nii[.gz]")
    return gt, mask


def degrade_dataset(input_dir, output_dir, spec: DegradeSpec) -> list[dict]:
    """Degrade every case under input_dir; returns the written manifest."""
    spec.validate()
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    case_dirs = sorted(d for d in input_dir.iterdir() if d.is_dir())
    if not case_dirs:
        raise LayoutError(f"{input_dir}: no case directories found")

    manifest = []
    for case_index, case_dir in enumerate(case_dirs):
        cid = case_dir.name
        gt_path, mask_path = _find_case_files(case_dir)
        gt = read_volume(gt_path)
        healthy = read_mask(mask_path)

        out_case = output_dir / cid
        out_case.mkdir(parents=True, exist_ok=True)
        out_gt = out_case / f"{cid}-t1n.nii.gz"
        out_mask = out_case / f"{cid}-healthy-mask.nii.gz"
        write_volume(gt, out_gt, compress=True)
        write_mask(healthy, out_mask, compress=True)

        for draw in range(spec.per_case_draws):
            degraded, sigma = degrade_case(gt, healthy, spec, case_index, draw)
            suffix = "" if spec.per_case_draws == 1 else f"-{draw}"
            out_deg = out_case / f"{cid}-degraded{suffix}.nii.gz"
            write_volume(degraded, out_deg, compress=True)
            manifest.append({
                "case_id": cid,
                "sigma": sigma,
                "degraded_path": str(out_deg),
                "gt_path": str(out_gt),
                "mask_path": str(out_mask),
            })
            log.info("degraded %s draw %d with sigma=%.4f", cid, draw, sigma)

    try:
        with open(output_dir / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2)
    except OSError as e:
        raise IoFailure(f"cannot write manifest: {e}") from e
    return manifest
