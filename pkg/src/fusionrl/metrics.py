"""Reference-based fusion quality metrics: CC, PSNR, SSIM, Qabf.

All four take (fused, visible, infrared) float images in [0, 1], convert to
grayscale, and aggregate the two source comparisons by arithmetic mean
(fusion-literature convention). PSNR/SSIM operate on the 8-bit scale
(peak 255 by default).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .images import load_image, to_grayscale

PSNR_CAP_DB = 100.0

# Qabf edge-preservation constants from the gradient-based fusion metric
# literature (strength and orientation sigmoids).
QABF_GAMMA_G = 0.9994
QABF_KAPPA_G = -15.0
QABF_SIGMA_G = 0.5
QABF_GAMMA_A = 0.9879
QABF_KAPPA_A = -22.0
QABF_SIGMA_A = 0.8

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])

METRIC_COLUMNS = ("CC", "PSNR", "Qabf", "SSIM")


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; either argument constant gives 0 by convention."""
    xc = x - x.mean()
    yc = y - y.mean()
    denom_sq = float((xc * xc).sum()) * float((yc * yc).sum())
    if denom_sq <= 0.0:
        return 0.0
    return float((xc * yc).sum() / math.sqrt(denom_sq))


def cc(fused: np.ndarray, visible: np.ndarray, infrared: np.ndarray) -> float:
    """Mean of corr(F, vis) and corr(F, ir) on grayscale."""
    f = to_grayscale(fused)
    return 0.5 * (_pearson(f, to_grayscale(visible)) + _pearson(f, to_grayscale(infrared)))


def psnr(
    fused: np.ndarray,
    visible: np.ndarray,
    infrared: np.ndarray,
    peak: float = 255.0,
    cap: float = PSNR_CAP_DB,
) -> float:
    """PSNR against the averaged fused-vs-source MSE; zero MSE returns `cap`."""
    f = to_grayscale(fused) * peak
    v = to_grayscale(visible) * peak
    i = to_grayscale(infrared) * peak
    mse_avg = 0.5 * (float(((f - v) ** 2).mean()) + float(((f - i) ** 2).mean()))
    if mse_avg <= 0.0:
        return cap
    return 10.0 * math.log10(peak * peak / mse_avg)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g1 = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    window = np.outer(g1, g1)
    return window / window.sum()


def _ssim_single(x: np.ndarray, y: np.ndarray, peak: float, k1: float = 0.01, k2: float = 0.03) -> float:
    """Standard single-scale SSIM, 11x11 Gaussian window sigma 1.5, valid mode."""
    h, w = x.shape
    window = _gaussian_window()
    if h < window.shape[0] or w < window.shape[1]:
        raise ValueError(f"image {h}x{w} smaller than the {window.shape[0]}x{window.shape[1]} SSIM window")
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    mu_x = convolve2d(x, window, mode="valid")
    mu_y = convolve2d(y, window, mode="valid")
    sigma_x = convolve2d(x * x, window, mode="valid") - mu_x * mu_x
    sigma_y = convolve2d(y * y, window, mode="valid") - mu_y * mu_y
    sigma_xy = convolve2d(x * y, window, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    return float((num / den).mean())


def ssim(
    fused: np.ndarray,
    visible: np.ndarray,
    infrared: np.ndarray,
    peak: float = 255.0,
) -> float:
    """Mean of SSIM(F, vis) and SSIM(F, ir) on the `peak` dynamic range."""
    f = to_grayscale(fused) * peak
    v = to_grayscale(visible) * peak
    i = to_grayscale(infrared) * peak
    return 0.5 * (_ssim_single(f, v, peak) + _ssim_single(f, i, peak))


def _sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sobel gradients with symmetric boundary: (gx, gy, magnitude)."""
    padded = np.pad(gray, 1, mode="symmetric")
    gx = convolve2d(padded, SOBEL_X[::-1, ::-1], mode="valid")
    gy = convolve2d(padded, SOBEL_Y[::-1, ::-1], mode="valid")
    return gx, gy, np.sqrt(gx * gx + gy * gy)


def _orientation(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    gx_safe = np.where(gx == 0.0, 1e-5, gx)
    return np.arctan(gy / gx_safe)


def _edge_preservation(g_src: np.ndarray, a_src: np.ndarray, g_fused: np.ndarray, a_fused: np.ndarray) -> np.ndarray:
    """Per-pixel Q^{AF}: strength-ratio and orientation-agreement sigmoids."""
    src_stronger = g_src > g_fused
    g_src_safe = np.where(g_src == 0.0, 1e-5, g_src)
    g_fused_safe = np.where(g_fused == 0.0, 1e-5, g_fused)
    strength = np.where(src_stronger, g_fused / g_src_safe, g_src / g_fused_safe)
    agreement = 1.0 - np.abs(a_src - a_fused) * 2.0 / np.pi
    q_g = QABF_GAMMA_G / (1.0 + np.exp(QABF_KAPPA_G * (strength - QABF_SIGMA_G)))
    q_a = QABF_GAMMA_A / (1.0 + np.exp(QABF_KAPPA_A * (agreement - QABF_SIGMA_A)))
    return q_g * q_a


def qabf(fused: np.ndarray, visible: np.ndarray, infrared: np.ndarray) -> float:
    """Gradient-preservation Q^{AB/F} weighted by source edge strength."""
    f = to_grayscale(fused)
    v = to_grayscale(visible)
    i = to_grayscale(infrared)
    gvx, gvy, gv = _sobel(v)
    gix, giy, gi = _sobel(i)
    gfx, gfy, gf = _sobel(f)
    av, ai, af = _orientation(gvx, gvy), _orientation(gix, giy), _orientation(gfx, gfy)
    q_vf = _edge_preservation(gv, av, gf, af)
    q_if = _edge_preservation(gi, ai, gf, af)
    weight_total = float((gv + gi).sum())
    if weight_total <= 0.0:
        return 0.0
    return float((q_vf * gv + q_if * gi).sum() / weight_total)


@dataclass
class MetricReport:
    per_triplet: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def aggregate(self) -> dict[str, float]:
        if not self.per_triplet:
            return {name: float("nan") for name in METRIC_COLUMNS}
        return {
            name: float(np.mean([row[name] for row in self.per_triplet.values()]))
            for name in METRIC_COLUMNS
        }

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["triplet_id", *METRIC_COLUMNS])
            for tid in sorted(self.per_triplet):
                row = self.per_triplet[tid]
                writer.writerow([tid] + [f"{row[name]:.6f}" for name in METRIC_COLUMNS])
            agg = self.aggregate
            writer.writerow(["mean"] + [f"{agg[name]:.6f}" for name in METRIC_COLUMNS])


def evaluate_triplet(fused: np.ndarray, visible: np.ndarray, infrared: np.ndarray) -> dict[str, float]:
    return {
        "CC": cc(fused, visible, infrared),
        "PSNR": psnr(fused, visible, infrared),
        "Qabf": qabf(fused, visible, infrared),
        "SSIM": ssim(fused, visible, infrared),
    }


def evaluate_manifest(manifest, split: str | None = None) -> MetricReport:
    """Run all metrics over every (or one split's) manifest triplet."""
    report = MetricReport()
    triplets = manifest.by_split(split) if split else manifest.triplets
    for t in triplets:
        fused = load_image(t.fused_path)
        visible = load_image(t.visible_path)
        infrared = load_image(t.infrared_path)
        report.per_triplet[t.triplet_id] = evaluate_triplet(fused, visible, infrared)
    return report
