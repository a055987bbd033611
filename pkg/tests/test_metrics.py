from __future__ import annotations

import math

import numpy as np
import pytest

from fusionrl.metrics import cc, evaluate_triplet, psnr, qabf, ssim

from util import pearson_oracle, qabf_oracle, qabf_self_fusion_ceiling


def rand_image(seed: int, size: int = 32) -> np.ndarray:
    return np.random.default_rng(seed).uniform(size=(size, size))


# ---- CC --------------------------------------------------------------------


def test_cc_identity_is_one():
    img = rand_image(0)
    assert cc(img, img, img) == pytest.approx(1.0, abs=1e-12)


def test_cc_perfect_anticorrelation():
    vis = rand_image(1)
    fused = 1.0 - vis
    assert cc(fused, vis, vis) == pytest.approx(-1.0, abs=1e-12)


def test_cc_constant_term_is_zero():
    vis = rand_image(2)
    constant = np.full_like(vis, 0.5)
    # fused correlates 1.0 with vis; the constant infrared term contributes 0
    assert cc(vis, vis, constant) == pytest.approx(0.5, abs=1e-12)
    assert cc(constant, vis, vis) == 0.0


def test_cc_matches_covariance_oracle():
    f, v, i = rand_image(3, 4), rand_image(4, 4), rand_image(5, 4)
    expected = 0.5 * (pearson_oracle(f, v) + pearson_oracle(f, i))
    assert cc(f, v, i) == pytest.approx(expected, abs=1e-12)


def test_cc_symmetric_in_sources():
    f, v, i = rand_image(6), rand_image(7), rand_image(8)
    assert cc(f, v, i) == pytest.approx(cc(f, i, v), abs=1e-12)


# ---- PSNR ------------------------------------------------------------------


def test_psnr_cap_on_identical():
    img = rand_image(10)
    assert psnr(img, img, img) == 100.0


def test_psnr_unit_mse_value():
    # sources offset so that both squared errors average to exactly 1 (8-bit scale)
    vis = np.full((16, 16), 0.25)
    fused = vis + 1.0 / 255.0
    value = psnr(fused, vis, vis)
    assert value == pytest.approx(10.0 * math.log10(255.0**2), abs=1e-9)
    assert value == pytest.approx(48.1308, abs=1e-3)


def test_psnr_decreases_with_noise():
    vis = rand_image(11)
    ir = rand_image(12)
    rng = np.random.default_rng(13)
    noise = rng.uniform(-1, 1, size=vis.shape)
    base = 0.5 * (vis + ir)
    values = [psnr(np.clip(base + amp * noise, 0, 1), vis, ir) for amp in (0.0, 0.05, 0.1, 0.2)]
    assert values == sorted(values, reverse=True)
    assert values[0] > values[-1]


# ---- SSIM ------------------------------------------------------------------


def test_ssim_identity():
    img = rand_image(20, 64)
    assert ssim(img, img, img) == pytest.approx(1.0, abs=1e-9)


def test_ssim_white_noise_near_zero():
    f, v, i = rand_image(21, 64), rand_image(22, 64), rand_image(23, 64)
    assert abs(ssim(f, v, i)) < 0.2


def test_ssim_penalizes_constant_shift():
    x = rand_image(24, 32)
    shifted = np.clip(x + 0.05, 0, 1)
    assert ssim(shifted, x, x) < ssim(x, x, x)


def test_ssim_rejects_tiny_images():
    img = rand_image(25, 8)
    with pytest.raises(ValueError, match="window"):
        ssim(img, img, img)


def test_ssim_symmetric_in_sources():
    f, v, i = rand_image(26, 32), rand_image(27, 32), rand_image(28, 32)
    assert ssim(f, v, i) == pytest.approx(ssim(f, i, v), abs=1e-12)


# ---- Qabf ------------------------------------------------------------------


def test_qabf_self_fusion_ceiling():
    img = rand_image(30, 16)
    expected = qabf_self_fusion_ceiling()
    assert qabf(img, img, img) == pytest.approx(expected, abs=1e-9)


def test_qabf_constant_images_guarded_zero():
    img = np.full((16, 16), 0.5)
    assert qabf(img, img, img) == 0.0


def test_qabf_matches_scalar_oracle():
    for seed in range(6):
        f, v, i = rand_image(40 + seed, 8), rand_image(50 + seed, 8), rand_image(60 + seed, 8)
        assert qabf(f, v, i) == pytest.approx(qabf_oracle(f, v, i), abs=1e-9)


def test_qabf_range():
    for seed in range(10):
        f, v, i = rand_image(70 + seed, 16), rand_image(80 + seed, 16), rand_image(90 + seed, 16)
        assert 0.0 <= qabf(f, v, i) <= 1.0


# ---- shared properties -------------------------------------------------------


def test_transposition_invariance():
    f, v, i = rand_image(100, 32), rand_image(101, 32), rand_image(102, 32)
    before = evaluate_triplet(f, v, i)
    after = evaluate_triplet(f.T, v.T, i.T)
    for name in ("CC", "PSNR", "SSIM"):
        assert before[name] == pytest.approx(after[name], abs=1e-9), name
    # the standard orientation convention (arctan gy/gx) wraps differently for
    # transposed gradients in opposite quadrants, so Qabf is only nearly invariant
    assert before["Qabf"] == pytest.approx(after["Qabf"], abs=0.01)


def test_rgb_inputs_accepted():
    rng = np.random.default_rng(103)
    f = rng.uniform(size=(32, 32, 3))
    v = rng.uniform(size=(32, 32, 3))
    i = rng.uniform(size=(32, 32))
    values = evaluate_triplet(f, v, i)
    assert set(values) == {"CC", "PSNR", "Qabf", "SSIM"}
    assert all(np.isfinite(x) for x in values.values())
