"""Image-quality metrics over an evaluation ROI: MSE, PSNR, 3D SSIM."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyRoi, VolumeTooSmall
from .intensity import joint_normalize
from .volume_io import Mask, Volume


@dataclass
class SsimParams:
    """Wang et al. constants extended to a 3D Gaussian window."""

    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def validate(self) -> None:
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise VolumeTooSmall(f"window_size must be odd >= 3, got {self.window_size}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise VolumeTooSmall("k1 and k2 must be positive")


@dataclass
class MetricReport:
    case_id: str
    method_id: str
    mse: float
    psnr: float  # math.inf when mse == 0
    ssim: float
    roi_voxels: int

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "method_id": self.method_id,
            "mse": self.mse,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "roi_voxels": self.roi_voxels,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        psnr = d["psnr"]
        return cls(
            case_id=d["case_id"],
            method_id=d["method_id"],
            mse=float(d["mse"]),
            psnr=math.inf if psnr == "inf" else float(psnr),
            ssim=float(d["ssim"]),
            roi_voxels=int(d["roi_voxels"]),
        )

    @classmethod
    def from_json(cls, s: str) -> "MetricReport":
        return cls.from_dict(json.loads(s))


def _roi(pred: Volume, gt: Volume, m: Mask) -> np.ndarray:
    if pred.dims != gt.dims or pred.dims != m.dims:
        raise DimensionMismatch(
            f"pred {pred.dims} / gt {gt.dims} / mask {m.dims} incongruent")
    sel = m.bool
    if not sel.any():
        raise EmptyRoi("mask selects no voxels")
    return sel


def mse(pred: Volume, gt: Volume, m: Mask) -> float:
    sel = _roi(pred, gt, m)
    diff = pred.data[sel] - gt.data[sel]
    return float(np.mean(diff * diff))


def psnr(pred: Volume, gt: Volume, m: Mask, dynamic_range: float = 1.0) -> float:
    e = mse(pred, gt, m)
    if e == 0.0:
        return math.inf
    return float(10.0 * math.log10(dynamic_range * dynamic_range / e))


def _window_mean(data: np.ndarray, w1d: np.ndarray) -> np.ndarray:
    out = data
    for axis in range(3):
        out = ndimage.correlate1d(out, w1d, axis=axis, mode="mirror")
    return out


def ssim(pred: Volume, gt: Volume, m: Mask, params: SsimParams | None = None) -> float:
    """Mean of the per-voxel SSIM map over mask voxels.

    Local statistics use a normalized 3D Gaussian window with mirror boundary.
    Local variances are E[X^2] - E[X]^2 clamped at 0; covariance is unclamped.
    """
    p = params or SsimParams()
    p.validate()
    sel = _roi(pred, gt, m)
    if min(pred.dims) < p.window_size:
        raise VolumeTooSmall(
            f"dims {pred.dims} smaller than window {p.window_size}")

    i = np.arange(p.window_size, dtype=np.float64) - (p.window_size - 1) / 2.0
    w = np.exp(-(i * i) / (2.0 * p.window_sigma ** 2))
    w /= w.sum()

    x = pred.data
    y = gt.data
    mu_x = _window_mean(x, w)
    mu_y = _window_mean(y, w)
    e_xx = _window_mean(x * x, w)
    e_yy = _window_mean(y * y, w)
    e_xy = _window_mean(x * y, w)

    var_x = np.maximum(e_xx - mu_x * mu_x, 0.0)
    var_y = np.maximum(e_yy - mu_y * mu_y, 0.0)
    cov_xy = e_xy - mu_x * mu_y

    c1 = (p.k1 * p.dynamic_range) ** 2
    c2 = (p.k2 * p.dynamic_range) ** 2
    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))

    return float(np.mean(ssim_map[sel]))


def evaluate_case(pred: Volume, gt: Volume, m: Mask,
                  case_id: str = "", method_id: str = "",
                  params: SsimParams | None = None) -> MetricReport:
    """Joint-normalize to the gt range, then compute all three metrics."""
    gt_n, pred_n = joint_normalize(gt, pred, m)
    return MetricReport(
        case_id=case_id,
        method_id=method_id,
        mse=mse(pred_n, gt_n, m),
        psnr=psnr(pred_n, gt_n, m),
        ssim=ssim(pred_n, gt_n, m, params),
        roi_voxels=int(m.bool.sum()),
    )


def write_reports_jsonl(reports: list[MetricReport], path) -> None:
    with open(path, "w") as f:
        for r in reports:
            f.write(r.to_json() + "\n")


def read_reports_jsonl(path) -> list[MetricReport]:
    reports = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                reports.append(MetricReport.from_json(line))
    return reports
