"""Image loading, conversion, and resizing helpers shared across the pipeline.

All in-memory images are float64/float32 numpy arrays with values in [0, 1],
shaped (H, W) for grayscale or (H, W, 3) for color. On disk everything is
8-bit PNG; single-channel infrared files are accepted as either 1- or
3-channel images.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

# ITU-R BT.601 luma weights, the rgb2gray convention used throughout the
# fusion-metrics literature.
_LUMA = np.array([0.299, 0.587, 0.114])


class ImageDecodeError(Exception):
    """Raised when an image file cannot be read or decoded."""


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PNG (or any PIL-readable file) as float64 in [0, 1].

    Returns (H, W) for single-channel files and (H, W, 3) otherwise.
    """
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("L", "I;16", "I"):
                arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
            else:
                arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image file {os.fspath(path)!r}: {exc}") from exc
    return arr


def save_image(path: str | os.PathLike, arr: np.ndarray) -> None:
    """Write a [0, 1] float array as an 8-bit PNG."""
    data = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    data = np.round(data * 255.0).astype(np.uint8)
    mode = "L" if data.ndim == 2 else "RGB"
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def to_grayscale(arr: np.ndarray) -> np.ndarray:
    """Collapse an (H, W[, C]) image to an (H, W) luma grid."""
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr @ _LUMA
    raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {arr.shape}")


def ensure_rgb(arr: np.ndarray) -> np.ndarray:
    """Replicate single-channel images to 3 channels; pass RGB through."""
    if arr.ndim == 2:
        return np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 1:
        return np.repeat(arr, 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr
    raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {arr.shape}")


def spatial_dims(arr: np.ndarray) -> tuple[int, int]:
    """(H, W) of an image array."""
    return int(arr.shape[0]), int(arr.shape[1])


def block_mean_downsample(gray: np.ndarray, grid: int) -> np.ndarray:
    """Average-pool a grayscale image onto a grid×grid lattice.

    Rows/columns are split into `grid` nearly-equal runs, so any H, W >= grid
    works and the result is deterministic.
    """
    if gray.ndim != 2:
        raise ValueError("block_mean_downsample expects a grayscale (H, W) array")
    h, w = gray.shape
    if h < grid or w < grid:
        raise ValueError(f"image {h}x{w} smaller than {grid}x{grid} downsample grid")
    row_chunks = np.array_split(np.arange(h), grid)
    col_chunks = np.array_split(np.arange(w), grid)
    out = np.empty((grid, grid), dtype=np.float64)
    for i, rows in enumerate(row_chunks):
        band = gray[rows[0] : rows[-1] + 1]
        for j, cols in enumerate(col_chunks):
            out[i, j] = band[:, cols[0] : cols[-1] + 1].mean()
    return out


def gradient_magnitude(gray: np.ndarray) -> np.ndarray:
    """Central-difference gradient magnitude of a grayscale image."""
    gy, gx = np.gradient(gray)
    return np.sqrt(gx * gx + gy * gy)
