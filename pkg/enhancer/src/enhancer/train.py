"""Patch-based training of the enhancement network on degraded/gt pairs.

Consumes the degradation manifest produced by the primary toolkit; all
volumes go through its NIfTI reader, so the two components only exchange
files in the published formats.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from voxpost.volume_io import read_mask, read_volume

from .errors import InsufficientData, ManifestError
from .model import TinyUNet3D

log = logging.getLogger(__name__)


@dataclass
class EnhancerConfig:
    patch_size: tuple[int, int, int] = (32, 32, 32)
    epochs: int = 35
    iters_per_epoch: int = 50
    batch_size: int = 4
    learning_rate: float = 1e-3
    base_channels: int = 8
    noise_aug: float = 0.001  # additive Gaussian noise on inputs
    identity_frac: float = 0.2  # fraction of clean->clean samples (anti-overshoot)
    seed: int = 0
    # loss is fixed to mean squared error

    @classmethod
    def from_file(cls, path) -> "EnhancerConfig":
        with open(path) as f:
            doc = json.load(f)
        cfg = cls()
        for key, value in doc.items():
            if not hasattr(cfg, key):
                raise ManifestError(f"unknown config key {key!r}")
            if key == "patch_size":
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg


@dataclass
class _Case:
    degraded: np.ndarray
    gt: np.ndarray
    mask: np.ndarray
    mask_voxels: np.ndarray  # (K, 3) coordinates of mask=1 voxels
    lo: float = 0.0
    hi: float = 1.0


def _normalize(a: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (a - lo) / (hi - lo) if hi > lo else a - lo


def load_manifest(path) -> list[dict]:
    try:
        with open(path) as f:
            entries = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    if not isinstance(entries, list):
        raise ManifestError("manifest must be a JSON array")
    for e in entries:
        for key in ("degraded_path", "gt_path", "mask_path"):
            if key not in e:
                raise ManifestError(f"manifest entry missing {key}")
    return entries


def _load_case(entry: dict) -> _Case:
    deg = read_volume(entry["degraded_path"]).data
    gt = read_volume(entry["gt_path"]).data
    mask = read_mask(entry["mask_path"]).data.astype(bool)
    lo, hi = float(gt.min()), float(gt.max())
    return _Case(_normalize(deg, lo, hi), _normalize(gt, lo, hi), mask,
                 np.argwhere(mask), lo, hi)


def _sample_patch(case: _Case, patch: tuple[int, int, int],
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random patch centered on a mask voxel (clipped to the volume), so the
    degraded region dominates the loss."""
    shape = case.gt.shape
    p = [min(ps, s) for ps, s in zip(patch, shape)]
    if len(case.mask_voxels):
        center = case.mask_voxels[rng.integers(0, len(case.mask_voxels))]
        start = [int(np.clip(c - pi // 2, 0, s - pi))
                 for c, pi, s in zip(center, p, shape)]
    else:
        start = [rng.integers(0, s - pi + 1) for pi, s in zip(p, shape)]
    sl = tuple(slice(st, st + pi) for st, pi in zip(start, p))
    return case.degraded[sl], case.gt[sl]


def _batch(cases, cfg: EnhancerConfig, rng) -> tuple[torch.Tensor, torch.Tensor]:
    xs, ys = [], []
    for _ in range(cfg.batch_size):
        case = cases[rng.integers(0, len(cases))]
        x, y = _sample_patch(case, cfg.patch_size, rng)
        if rng.random() < cfg.identity_frac:
            x = y  # clean input: teaches the net to keep sharp data untouched
        # toy augmentation: axis mirroring + light input noise
        for axis in range(3):
            if rng.random() < 0.5:
                x = np.flip(x, axis)
                y = np.flip(y, axis)
        if cfg.noise_aug > 0:
            x = x + cfg.noise_aug * rng.standard_normal(x.shape)
        xs.append(np.ascontiguousarray(x))
        ys.append(np.ascontiguousarray(y))
    to = lambda arr: torch.from_numpy(np.stack(arr)[:, None]).float()
    return to(xs), to(ys)


def train(manifest_path, cfg: EnhancerConfig, model_out) -> Path:
    """Train the enhancer; writes the model artifact and a JSONL training log
    at <model_out>.log.jsonl. Returns the model path."""
    entries = load_manifest(manifest_path)
    if len(entries) < 2:
        raise InsufficientData(
            f"need >= 2 cases for a train/val split, got {len(entries)}")

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    cases = [_load_case(e) for e in entries]
    n_val = max(1, len(cases) // 5)
    train_cases, val_cases = cases[:-n_val], cases[-n_val:]

    model = TinyUNet3D(cfg.base_channels)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    sched = torch.optim.lr_scheduler.StepLR(
        opt, step_size=max(1, 2 * cfg.epochs // 3), gamma=0.3)
    loss_fn = torch.nn.MSELoss()

    model_out = Path(model_out)
    log_path = model_out.with_name(model_out.name + ".log.jsonl")
    val_rng = np.random.default_rng(cfg.seed + 1)
    val_batches = [_batch(val_cases, cfg, val_rng) for _ in range(8)]

    with open(log_path, "w") as log_f:
        for epoch in range(cfg.epochs):
            model.train()
            losses = []
            for _ in range(cfg.iters_per_epoch):
                x, y = _batch(train_cases, cfg, rng)
                opt.zero_grad()
                loss = loss_fn(model(x), y)
                loss.backward()
                opt.step()
                losses.append(float(loss.item()))
            sched.step()
            model.eval()
            with torch.no_grad():
                val_loss = float(np.mean(
                    [loss_fn(model(x), y).item() for x, y in val_batches]))
            entry = {"epoch": epoch, "train_loss": float(np.mean(losses)),
                     "val_loss": val_loss}
            log_f.write(json.dumps(entry) + "\n")
            log.info("epoch %d train %.3e val %.3e", epoch, entry["train_loss"],
                     val_loss)

    torch.save({"state_dict": model.state_dict(),
                "base_channels": cfg.base_channels,
                "patch_size": list(cfg.patch_size)}, model_out)
    return model_out
