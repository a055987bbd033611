"""Per-cluster quality scoring and representative selection.

Each pair is scored on sharpness, contrast, resolution, and information
content (file size proxy). Raw components are min-max normalized within the
cluster, then combined 50% visual (mean of sharpness and contrast), 30%
resolution, 20% information. Degenerate ranges (singleton clusters, ties)
pin the normalized component to 1 so the weights stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..images import gradient_magnitude, to_grayscale
from .dedup import SceneCluster
from .pairs import ImagePair

W_VISUAL, W_RESOLUT, W_INFO = 0.5, 0.3, 0.2


@dataclass(frozen=True)
class QualityScore:
    pair_id: str
    sharpness: float
    contrast: float
    resolution_score: float
    info_score: float
    total: float


def _raw_components(pair: ImagePair) -> tuple[float, float, float, float]:
    gray = to_grayscale(pair.visible())
    sharpness = float(gradient_magnitude(gray).mean())
    contrast = float(gray.std())
    resolution = float(pair.height * pair.width)
    info = float(pair.file_size_bytes)
    return sharpness, contrast, resolution, info


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= 0.0:
        return np.ones_like(values)
    return (values - lo) / (hi - lo)


def score_cluster(cluster_context: list[ImagePair]) -> dict[str, QualityScore]:
    """Quality scores for every pair of a cluster, normalized within it."""
    if not cluster_context:
        raise ValueError("cluster_context must be non-empty")
    raw = np.array([_raw_components(p) for p in cluster_context], dtype=np.float64)
    sharp_n = _minmax(raw[:, 0])
    contr_n = _minmax(raw[:, 1])
    res_n = _minmax(raw[:, 2])
    info_n = _minmax(raw[:, 3])
    visual = (sharp_n + contr_n) / 2.0
    total = W_VISUAL * visual + W_RESOLUT * res_n + W_INFO * info_n
    return {
        p.pair_id: QualityScore(
            pair_id=p.pair_id,
            sharpness=float(raw[i, 0]),
            contrast=float(raw[i, 1]),
            resolution_score=float(raw[i, 2]),
            info_score=float(raw[i, 3]),
            total=float(total[i]),
        )
        for i, p in enumerate(cluster_context)
    }


def quality_score(pair: ImagePair, cluster_context: list[ImagePair]) -> QualityScore:
    """Score one pair against its cluster context (which must contain it)."""
    scores = score_cluster(cluster_context)
    if pair.pair_id not in scores:
        raise ValueError(f"pair {pair.pair_id!r} not present in its cluster context")
    return scores[pair.pair_id]


def select_representative(cluster: SceneCluster, scores: dict[str, QualityScore]) -> str:
    """Argmax of total quality; ties break to the lexicographically smallest pair_id."""
    missing = [m for m in cluster.member_ids if m not in scores]
    if missing:
        raise ValueError(f"cluster {cluster.cluster_id}: missing quality scores for {missing}")
    return min(cluster.member_ids, key=lambda m: (-scores[m].total, m))
