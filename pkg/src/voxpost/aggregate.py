"""Voxel-wise fusion of aligned prediction volumes.

Supported reductions: mean (optionally weighted), median, geometric mean,
max, min. With exactly two inputs the mean and median are mathematically
(and here bit-for-bit) identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadWeights, DimensionMismatch, TooFewInputs
from .volume_io import Mask, Volume

GEOMEAN_EPS = 1e-12

MODES = ("mean", "median", "geomean", "max", "min")


@dataclass
class AggregationMode:
    mode: str = "mean"
    weights: list[float] | None = None  # mean only

    def validate(self, n_inputs: int) -> None:
        if self.mode not in MODES:
            raise BadWeights(f"unknown aggregation mode {self.mode!r}")
        if self.weights is not None:
            if self.mode != "mean":
                raise BadWeights("weights are only supported for mean aggregation")
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (n_inputs,):
                raise BadWeights(f"expected {n_inputs} weights, got {w.shape}")
            if np.any(w < 0):
                raise BadWeights("weights must be non-negative")
            if abs(float(w.sum()) - 1.0) > 1e-9:
                raise BadWeights(f"weights sum to {w.sum():.12g}, expected 1")


def _check_inputs(inputs: list[Volume]) -> None:
    if len(inputs) < 2:
        raise TooFewInputs(f"need >= 2 volumes, got {len(inputs)}")
    d0, s0 = inputs[0].dims, inputs[0].spacing
    for i, v in enumerate(inputs[1:], 1):
        if v.dims != d0:
            raise DimensionMismatch(f"input {i} dims {v.dims} != {d0}")
        if not np.allclose(v.spacing, s0, rtol=1e-6):
            raise DimensionMismatch(f"input {i} spacing {v.spacing} != {s0}")


def ensemble(inputs: list[Volume], mode: AggregationMode) -> Volume:
    """Fuse N congruent volumes voxel by voxel; geometry taken from inputs[0]."""
    _check_inputs(inputs)
    mode.validate(len(inputs))
    stack = np.stack([v.data for v in inputs], axis=0)

    if mode.mode == "mean":
        if mode.weights is not None:
            w = np.asarray(mode.weights, dtype=np.float64)
            out = np.tensordot(w, stack, axes=(0, 0))
        else:
            out = np.mean(stack, axis=0)
    elif mode.mode == "median":
        out = np.median(stack, axis=0)
    elif mode.mode == "geomean":
        # MRI magnitudes are non-negative; clamp shields log from zeros.
        out = np.exp(np.mean(np.log(np.maximum(stack, GEOMEAN_EPS)), axis=0))
    elif mode.mode == "max":
        out = np.max(stack, axis=0)
    else:
        out = np.min(stack, axis=0)

    return inputs[0].with_data(out)


def ensemble_masked(inputs: list[Volume], mode: AggregationMode,
                    m: Mask, base: Volume) -> Volume:
    """Fuse inside the mask; copy ``base`` bit-exactly where the mask is 0."""
    _check_inputs(inputs)
    if base.dims != inputs[0].dims or m.dims != inputs[0].dims:
        raise DimensionMismatch(
            f"mask {m.dims} / base {base.dims} incongruent with inputs {inputs[0].dims}")
    fused = ensemble(inputs, mode)
    out = np.where(m.bool, fused.data, base.data)
    return base.with_data(out)
