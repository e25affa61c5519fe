import math

import numpy as np
import pytest

from voxpost import errors
from voxpost.metrics import MetricReport, SsimParams, evaluate_case, mse, psnr, ssim
from voxpost.volume_io import Mask, Volume

from phantoms import random_mask, random_volume, smooth_phantom, sphere_mask
from oracles import brute_force_ssim


def full_mask(shape):
    return Mask(np.ones(shape, dtype=np.uint8))


def test_mse_identical_is_zero(rng):
    v = random_volume(rng)
    assert mse(v, v, full_mask((8, 8, 8))) == 0.0


def test_mse_constant_difference():
    gt = Volume(np.zeros((4, 4, 4)))
    pred = Volume(np.full((4, 4, 4), 0.1))
    assert mse(pred, gt, full_mask((4, 4, 4))) == pytest.approx(0.01)


def test_mse_matches_scalar_loop(rng):
    pred, gt = random_volume(rng), random_volume(rng)
    m = random_mask(rng)
    total, n = 0.0, 0
    for idx in np.ndindex(8, 8, 8):
        if m.data[idx]:
            total += (pred.data[idx] - gt.data[idx]) ** 2
            n += 1
    assert abs(mse(pred, gt, m) - total / n) < 1e-12


def test_psnr_values():
    gt = Volume(np.zeros((4, 4, 4)))
    m = full_mask((4, 4, 4))
    assert psnr(Volume(np.full((4, 4, 4), 0.1)), gt, m) == pytest.approx(20.0)
    assert psnr(Volume(np.full((4, 4, 4), 1.0)), gt, m) == pytest.approx(0.0)
    assert psnr(gt, gt, m) == math.inf


def test_ssim_identical_is_exactly_one(rng):
    v = random_volume(rng, (16, 16, 16))
    assert ssim(v, v, full_mask((16, 16, 16))) == 1.0


def test_ssim_symmetry(rng):
    a = random_volume(rng, (16, 16, 16))
    b = random_volume(rng, (16, 16, 16))
    m = full_mask((16, 16, 16))
    assert ssim(a, b, m) == pytest.approx(ssim(b, a, m), abs=1e-14)


def test_ssim_bounded(rng):
    a = random_volume(rng, (16, 16, 16))
    b = random_volume(rng, (16, 16, 16))
    assert abs(ssim(a, b, full_mask((16, 16, 16)))) <= 1.0


def test_ssim_matches_brute_force(rng):
    for _ in range(2):
        a = random_volume(rng, (16, 16, 16))
        b = random_volume(rng, (16, 16, 16))
        m = full_mask((16, 16, 16))
        got = ssim(a, b, m)
        expected = brute_force_ssim(a.data, b.data, m.data.astype(bool))
        assert abs(got - expected) < 1e-6


def test_ssim_volume_too_small(rng):
    a = random_volume(rng, (8, 8, 8))
    with pytest.raises(errors.VolumeTooSmall):
        ssim(a, a, full_mask((8, 8, 8)))


def test_empty_roi(rng):
    a = random_volume(rng)
    with pytest.raises(errors.EmptyRoi):
        mse(a, a, Mask(np.zeros((8, 8, 8), dtype=np.uint8)))


def test_metrics_depend_only_on_roi(rng):
    gt = smooth_phantom((16, 16, 16), seed=3)
    pred = Volume(gt.data + 0.01 * rng.standard_normal((16, 16, 16)))
    m = sphere_mask((16, 16, 16), 0.3)
    base = (mse(pred, gt, m), psnr(pred, gt, m), ssim(pred, gt, m))
    tampered = pred.data.copy()
    tampered[~m.bool] += 123.0
    after = (mse(Volume(tampered), gt, m), psnr(Volume(tampered), gt, m),
             ssim(Volume(tampered), gt, m))
    # mse/psnr are strictly ROI sums; ssim map is evaluated on ROI voxels only
    assert base[0] == after[0] and base[1] == after[1]


def test_noise_monotonicity(rng):
    gt = smooth_phantom((16, 16, 16), seed=5)
    m = full_mask((16, 16, 16))
    noise = rng.standard_normal((16, 16, 16))
    prev_mse, prev_psnr = 0.0, math.inf
    for amp in (0.01, 0.02, 0.05, 0.1):
        pred = Volume(gt.data + amp * noise)
        e = mse(pred, gt, m)
        p = psnr(pred, gt, m)
        assert e >= prev_mse
        assert p <= prev_psnr
        prev_mse, prev_psnr = e, p


def test_evaluate_case_identical(rng):
    gt = smooth_phantom((16, 16, 16), seed=1)
    m = sphere_mask((16, 16, 16), 0.3)
    r = evaluate_case(gt, gt, m, case_id="c0", method_id="self")
    assert r.mse == 0.0
    assert r.psnr == math.inf
    assert r.ssim == 1.0
    assert r.roi_voxels == int(m.data.sum())


def test_evaluate_case_ordering(rng):
    gt = smooth_phantom((16, 16, 16), seed=2)
    m = sphere_mask((16, 16, 16), 0.35)
    noise = rng.standard_normal((16, 16, 16))
    light = Volume(gt.data + 0.02 * noise)
    heavy = Volume(gt.data + 0.5 * noise)
    r_light = evaluate_case(light, gt, m)
    r_heavy = evaluate_case(heavy, gt, m)
    assert r_light.mse < r_heavy.mse
    assert r_light.psnr > r_heavy.psnr
    assert r_light.ssim > r_heavy.ssim


def test_report_json_roundtrip():
    r = MetricReport("c1", "m1", 0.0, math.inf, 1.0, 42)
    back = MetricReport.from_json(r.to_json())
    assert back == r
    r2 = MetricReport("c1", "m2", 0.01, 20.0, 0.9, 42)
    assert MetricReport.from_json(r2.to_json()) == r2


def test_ssim_params_validation():
    with pytest.raises(errors.VolumeTooSmall):
        SsimParams(window_size=4).validate()
    with pytest.raises(errors.VolumeTooSmall):
        SsimParams(k1=0.0).validate()
