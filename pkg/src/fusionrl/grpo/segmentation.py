"""Region extraction for group-relative optimization.

The default grid segmenter tiles the image into K near-equal rectangles:
deterministic, content-free, test-friendly. The intensity segmenter builds
quantile-quantized connected components and merges the smallest into their
most similar neighbor until roughly K regions remain. Any external
segmentation model can plug in through the same callable signature
(image -> list of boolean masks).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from ..images import to_grayscale

Segmenter = Callable[[np.ndarray, int], list[np.ndarray]]


@dataclass
class RegionSet:
    masks: list[np.ndarray]

    def __post_init__(self) -> None:
        if not self.masks:
            raise ValueError("a region set needs at least one mask")
        for i, mask in enumerate(self.masks):
            if mask.dtype != np.bool_:
                self.masks[i] = mask.astype(bool)
            if not self.masks[i].any():
                raise ValueError(f"region mask #{i} is empty")

    @property
    def k(self) -> int:
        return len(self.masks)

    @property
    def coverage(self) -> float:
        union = np.zeros(self.masks[0].shape, dtype=bool)
        for mask in self.masks:
            union |= mask
        return float(union.mean())

    def areas(self) -> np.ndarray:
        return np.array([int(m.sum()) for m in self.masks], dtype=np.int64)


def grid_segment(image: np.ndarray, k_target: int) -> list[np.ndarray]:
    """Partition the frame into exactly k_target near-equal rectangles."""
    h, w = image.shape[:2]
    if k_target < 1:
        raise ValueError("k_target must be >= 1")
    if k_target > h * w:
        raise ValueError(f"k_target {k_target} exceeds pixel count {h * w}")
    rows = max(1, int(np.sqrt(k_target)))
    base, extra = divmod(k_target, rows)
    cols_per_row = [base + 1 if r < extra else base for r in range(rows)]
    row_runs = np.array_split(np.arange(h), rows)
    masks = []
    for run, cols in zip(row_runs, cols_per_row):
        col_runs = np.array_split(np.arange(w), cols)
        for crun in col_runs:
            mask = np.zeros((h, w), dtype=bool)
            mask[run[0] : run[-1] + 1, crun[0] : crun[-1] + 1] = True
            masks.append(mask)
    return masks


def _quantile_labels(gray: np.ndarray, levels: int) -> np.ndarray:
    edges = np.quantile(gray, np.linspace(0.0, 1.0, levels + 1))
    inner = np.unique(edges[1:-1])
    return np.digitize(gray, inner)


def intensity_segment(image: np.ndarray, k_target: int) -> list[np.ndarray]:
    """Quantile-quantize intensities, label components, merge down to ~K."""
    h, w = image.shape[:2]
    if k_target < 1:
        raise ValueError("k_target must be >= 1")
    if k_target > h * w:
        raise ValueError(f"k_target {k_target} exceeds pixel count {h * w}")
    gray = to_grayscale(np.asarray(image, dtype=np.float64))
    quantized = _quantile_labels(gray, k_target)

    seg = np.zeros((h, w), dtype=np.int64)
    next_label = 1
    for level in np.unique(quantized):
        comp, n = ndimage.label(quantized == level)
        seg[comp > 0] = comp[comp > 0] + next_label - 1
        next_label += n

    means = {lab: float(gray[seg == lab].mean()) for lab in np.unique(seg)}
    sizes = {lab: int((seg == lab).sum()) for lab in means}
    while len(means) > k_target:
        smallest = min(means, key=lambda lab: (sizes[lab], lab))
        mask = seg == smallest
        dilated = ndimage.binary_dilation(mask)
        neighbors = set(np.unique(seg[dilated & ~mask])) - {smallest}
        if not neighbors:
            # isolated region (should not happen on a full partition)
            neighbors = set(means) - {smallest}
        target = min(neighbors, key=lambda lab: (abs(means[lab] - means[smallest]), lab))
        seg[mask] = target
        total = sizes[target] + sizes[smallest]
        means[target] = (means[target] * sizes[target] + means[smallest] * sizes[smallest]) / total
        sizes[target] = total
        del means[smallest], sizes[smallest]

    return [seg == lab for lab in sorted(means)]


SEGMENTERS: dict[str, Segmenter] = {
    "grid": grid_segment,
    "superpixel": intensity_segment,
}


def segment_regions(fused: np.ndarray, segmenter: str | Segmenter, k_target: int) -> RegionSet:
    """Segment a fused image into a RegionSet with roughly k_target regions."""
    fn = SEGMENTERS[segmenter] if isinstance(segmenter, str) else segmenter
    return RegionSet(masks=fn(fused, k_target))
