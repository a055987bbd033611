"""Overlay rendering: predicted artifact regions outlined as red circles.

The predicted heatmap is thresholded, split into connected components, and
each component is circled by its exact minimal enclosing circle (randomized
incremental algorithm, seeded for determinism).
"""

from __future__ import annotations

import math
import os
import random

import numpy as np
import torch
from PIL import Image, ImageDraw
from scipy import ndimage

from .images import ensure_rgb, load_image

OVERLAY_THRESHOLD = 0.5
_MEC_EPS = 1e-10


def _in_circle(circle: tuple[float, float, float], p: tuple[float, float]) -> bool:
    cx, cy, r = circle
    return math.hypot(p[0] - cx, p[1] - cy) <= r * (1.0 + _MEC_EPS) + _MEC_EPS


def _diameter_circle(a, b) -> tuple[float, float, float]:
    cx, cy = (a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0
    return cx, cy, math.hypot(a[0] - b[0], a[1] - b[1]) / 2.0


def _circumcircle(a, b, c) -> tuple[float, float, float] | None:
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    return ux, uy, math.hypot(ax - ux, ay - uy)


def _cross(a, b, p) -> float:
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _mec_two_boundary(points, p, q):
    circle = _diameter_circle(p, q)
    left = None
    right = None
    for r in points:
        if _in_circle(circle, r):
            continue
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        side = _cross(p, q, r)
        center_side = _cross(p, q, (c[0], c[1]))
        if side > 0.0 and (left is None or center_side > _cross(p, q, (left[0], left[1]))):
            left = c
        elif side < 0.0 and (right is None or center_side < _cross(p, q, (right[0], right[1]))):
            right = c
    if left is None and right is None:
        return circle
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _mec_one_boundary(points, p):
    circle = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _in_circle(circle, q):
            circle = _diameter_circle(p, q) if circle[2] == 0.0 else _mec_two_boundary(points[: i + 1], p, q)
    return circle


def minimal_enclosing_circle(points) -> tuple[float, float, float]:
    """Exact smallest circle covering the points; returns (cx, cy, r)."""
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise ValueError("no points given")
    random.Random(0x5EED).shuffle(pts)
    circle = None
    for i, p in enumerate(pts):
        if circle is None or not _in_circle(circle, p):
            circle = _mec_one_boundary(pts[: i + 1], p)
    return circle


def heatmap_circles(heatmap: np.ndarray, threshold: float = OVERLAY_THRESHOLD) -> list[tuple[float, float, float]]:
    """Minimal enclosing circles of the thresholded heatmap's components."""
    mask = np.asarray(heatmap) >= threshold
    labels, count = ndimage.label(mask)
    circles = []
    for lab in range(1, count + 1):
        ys, xs = np.nonzero(labels == lab)
        circles.append(minimal_enclosing_circle(list(zip(xs.tolist(), ys.tolist()))))
    return circles


def resize_heatmap(heatmap: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    if heatmap.shape == tuple(dims):
        return heatmap
    tensor = torch.from_numpy(np.asarray(heatmap, dtype=np.float64))[None, None]
    return torch.nn.functional.interpolate(tensor, size=tuple(dims), mode="bilinear", align_corners=False)[
        0, 0
    ].numpy()


def draw_overlay(fused: np.ndarray, heatmap: np.ndarray, threshold: float = OVERLAY_THRESHOLD) -> np.ndarray:
    """Fused image with every predicted artifact component circled in red."""
    rgb = np.clip(ensure_rgb(fused), 0.0, 1.0)
    heatmap = resize_heatmap(heatmap, rgb.shape[:2])
    image = Image.fromarray(np.round(rgb * 255.0).astype(np.uint8), mode="RGB")
    draw = ImageDraw.Draw(image)
    for cx, cy, r in heatmap_circles(heatmap, threshold):
        r = max(r, 1.0)
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], outline=(255, 0, 0), width=1)
    return np.asarray(image, dtype=np.float64) / 255.0


def export_overlays(reward_model, manifest, out_dir: str | os.PathLike, threshold: float = OVERLAY_THRESHOLD) -> list[str]:
    """Write one overlay PNG per manifest triplet; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for t in manifest.triplets:
        fused = load_image(t.fused_path)
        output = reward_model.score_triplet(load_image(t.visible_path), load_image(t.infrared_path), fused)
        overlay = draw_overlay(fused, output.heatmap, threshold)
        path = os.path.join(os.fspath(out_dir), f"{t.triplet_id}.png")
        Image.fromarray(np.round(overlay * 255.0).astype(np.uint8), mode="RGB").save(path, format="PNG")
        written.append(path)
    return written
