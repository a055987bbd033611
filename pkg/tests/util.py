"""Independent oracles and helpers used across the test suite.

Everything here is deliberately written as straight-line scalar code,
separate from the library's vectorized implementations, so tests compare two
independent routes to the same quantity.
"""

from __future__ import annotations

import math

import numpy as np
import torch


def brute_force_clusters(vectors: list[np.ndarray], threshold: float) -> list[set[int]]:
    """Transitive-closure clustering by repeated merging (O(n^3) oracle)."""

    def cos(a, b):
        if np.array_equal(a, b):
            return 1.0
        return float(np.dot(a, b))

    clusters = [{i} for i in range(len(vectors))]
    changed = True
    while changed:
        changed = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                linked = any(
                    cos(vectors[a], vectors[b]) >= threshold for a in clusters[i] for b in clusters[j]
                )
                if linked:
                    clusters[i] |= clusters[j]
                    del clusters[j]
                    changed = True
                    break
            if changed:
                break
    return clusters


def rasterize_oracle(shapes, dims) -> np.ndarray:
    """Per-pixel distance test, one pixel at a time."""
    h, w = dims
    grid = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for shape in shapes:
                cx, cy = shape.center
                rx, ry = shape.rim_point
                r_sq = (cx - rx) ** 2 + (cy - ry) ** 2
                if (float(x) - cx) ** 2 + (float(y) - cy) ** 2 <= r_sq:
                    grid[y, x] = 1.0
                    break
    return grid


def bce_oracle(grid_a: np.ndarray, grid_b: np.ndarray, eps: float = 1e-6) -> float:
    """Mean BCE with both grids clamped, summed pixel by pixel."""
    h, w = grid_a.shape
    total = 0.0
    for y in range(h):
        for x in range(w):
            p = min(max(float(grid_a[y, x]), eps), 1.0 - eps)
            t = min(max(float(grid_b[y, x]), eps), 1.0 - eps)
            total += -(t * math.log(p) + (1.0 - t) * math.log(1.0 - p))
    return total / (h * w)


def pearson_oracle(x: np.ndarray, y: np.ndarray) -> float:
    xm = float(x.mean())
    ym = float(y.mean())
    num = float(((x - xm) * (y - ym)).sum())
    den = math.sqrt(float(((x - xm) ** 2).sum()) * float(((y - ym) ** 2).sum()))
    return num / den


def _reflect_index(i: int, n: int) -> int:
    # symmetric ("half-sample") reflection for a 1-pixel border
    if i < 0:
        return -i - 1
    if i >= n:
        return 2 * n - i - 1
    return i


def _sobel_at(img: np.ndarray, y: int, x: int) -> tuple[float, float]:
    kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
    ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]
    h, w = img.shape
    gx = gy = 0.0
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            v = float(img[_reflect_index(y + dy, h), _reflect_index(x + dx, w)])
            gx += kx[dy + 1][dx + 1] * v
            gy += ky[dy + 1][dx + 1] * v
    return gx, gy


def qabf_oracle(fused: np.ndarray, visible: np.ndarray, infrared: np.ndarray) -> float:
    """Scalar, per-pixel implementation of the gradient-preservation metric."""

    def grads(img):
        h, w = img.shape
        out = []
        for y in range(h):
            row = []
            for x in range(w):
                gx, gy = _sobel_at(img, y, x)
                g = math.sqrt(gx * gx + gy * gy)
                a = math.atan(gy / (gx if gx != 0.0 else 1e-5))
                row.append((g, a))
            out.append(row)
        return out

    def preservation(g_s, a_s, g_f, a_f):
        if g_s > g_f:
            strength = g_f / (g_s if g_s != 0.0 else 1e-5)
        else:
            strength = g_s / (g_f if g_f != 0.0 else 1e-5)
        agreement = 1.0 - abs(a_s - a_f) * 2.0 / math.pi
        q_g = 0.9994 / (1.0 + math.exp(-15.0 * (strength - 0.5)))
        q_a = 0.9879 / (1.0 + math.exp(-22.0 * (agreement - 0.8)))
        return q_g * q_a

    gv = grads(visible)
    gi = grads(infrared)
    gf = grads(fused)
    h, w = fused.shape
    num = 0.0
    den = 0.0
    for y in range(h):
        for x in range(w):
            (gsv, asv), (gsi, asi), (gsf, asf) = gv[y][x], gi[y][x], gf[y][x]
            num += preservation(gsv, asv, gsf, asf) * gsv + preservation(gsi, asi, gsf, asf) * gsi
            den += gsv + gsi
    return 0.0 if den <= 0.0 else num / den


def qabf_self_fusion_ceiling() -> float:
    """Closed-form value at perfect strength (1) and orientation agreement (1)."""
    q_g = 0.9994 / (1.0 + math.exp(-15.0 * (1.0 - 0.5)))
    q_a = 0.9879 / (1.0 + math.exp(-22.0 * (1.0 - 0.8)))
    return q_g * q_a


def finite_difference_gradients(loss_fn, parameters: list[torch.Tensor], step: float = 1e-5) -> list[torch.Tensor]:
    """Central finite differences of a scalar loss w.r.t. every parameter entry."""
    grads = []
    with torch.no_grad():
        for param in parameters:
            grad = torch.zeros_like(param)
            flat = param.view(-1)
            gflat = grad.view(-1)
            for idx in range(flat.numel()):
                original = flat[idx].item()
                flat[idx] = original + step
                hi = float(loss_fn())
                flat[idx] = original - step
                lo = float(loss_fn())
                flat[idx] = original
                gflat[idx] = (hi - lo) / (2.0 * step)
            grads.append(grad)
    return grads


def max_relative_error(analytic: list[torch.Tensor], numeric: list[torch.Tensor], floor: float = 1e-8) -> float:
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = torch.clamp(torch.maximum(a.abs(), n.abs()), min=floor)
        worst = max(worst, float(((a - n).abs() / denom).max()))
    return worst
