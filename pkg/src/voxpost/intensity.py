"""Intensity remapping: ROI histogram matching and joint metric normalization.

Matching is exact (sort-based quantile mapping with average-rank ties) rather
than binned: deterministic and parameter-free.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantReference, DegenerateRoi, DimensionMismatch
from .volume_io import Mask, Volume

log = logging.getLogger(__name__)

ROI_MASK = "mask"
ROI_VOLUME = "volume"


def _roi_indices(v: Volume, m: Mask | None, roi: str) -> np.ndarray:
    if roi == ROI_MASK:
        if m is None:
            raise DegenerateRoi("roi='mask' requires a mask")
        if m.dims != v.dims:
            raise DimensionMismatch(f"mask dims {m.dims} != volume dims {v.dims}")
        sel = m.bool
    elif roi == ROI_VOLUME:
        sel = np.ones(v.dims, dtype=np.bool_)
    else:
        raise DegenerateRoi(f"unknown roi {roi!r}")
    if int(sel.sum()) < 2:
        raise DegenerateRoi("ROI must contain at least 2 voxels")
    return sel


def histogram_match(src: Volume, ref: Volume, m: Mask | None = None,
                    roi: str = ROI_MASK) -> Volume:
    """Remap src's ROI intensities onto ref's ROI quantiles.

    A source voxel with average rank r among Ns ROI values is assigned the
    reference quantile q = (r - 0.5) / Ns, read off the sorted reference by
    linear interpolation at index q * Nr - 0.5 (clipped to [0, Nr-1]). With
    Ns == Nr and no ties this maps rank i to the i-th reference order
    statistic, so matching a volume to itself is the identity. Voxels outside
    the ROI are untouched. A constant source ROI collapses to the reference
    median.
    """
    if src.dims != ref.dims:
        raise DimensionMismatch(f"src dims {src.dims} != ref dims {ref.dims}")
    sel = _roi_indices(src, m, roi)

    s_vals = src.data[sel]
    r_sorted = np.sort(ref.data[sel])
    ns, nr = s_vals.size, r_sorted.size

    if np.all(s_vals == s_vals[0]):
        log.warning("histogram_match: constant source ROI, mapping to reference median")

    ranks = rankdata(s_vals, method="average")
    q = (ranks - 0.5) / ns
    idx = np.clip(q * nr - 0.5, 0.0, nr - 1.0)
    mapped = np.interp(idx, np.arange(nr, dtype=np.float64), r_sorted)

    out = src.data.copy()
    out[sel] = mapped
    return src.with_data(out)


def joint_normalize(gt: Volume, pred: Volume, m: Mask | None = None
                    ) -> tuple[Volume, Volume]:
    """Map both volumes to [0,1] by the ground truth's whole-volume min/max.

    The prediction is clamped into [0,1] after mapping. The mask is accepted
    for interface symmetry with the metrics but the normalization window is
    always the ground truth's full range.
    """
    if gt.dims != pred.dims:
        raise DimensionMismatch(f"gt dims {gt.dims} != pred dims {pred.dims}")
    if m is not None and m.dims != gt.dims:
        raise DimensionMismatch(f"mask dims {m.dims} != gt dims {gt.dims}")
    lo = float(gt.data.min())
    hi = float(gt.data.max())
    if hi == lo:
        raise ConstantReference("ground truth volume is constant; cannot normalize")
    scale = 1.0 / (hi - lo)
    # both sides pass through the same clamp so identical inputs stay identical
    gt_n = np.clip((gt.data - lo) * scale, 0.0, 1.0)
    pred_n = np.clip((pred.data - lo) * scale, 0.0, 1.0)
    return gt.with_data(gt_n), pred.with_data(pred_n)
