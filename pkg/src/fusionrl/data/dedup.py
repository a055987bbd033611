"""Duplicate-scene clustering over visible-image embeddings.

Two pairs land in the same cluster iff they are connected by a chain of
pairwise cosine similarities >= threshold (transitive closure, computed with
union-find). This is deterministic and independent of input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingVector


@dataclass
class SceneCluster:
    cluster_id: int
    member_ids: list[str]
    representative_id: str

    def __post_init__(self) -> None:
        if self.representative_id not in self.member_ids:
            raise ValueError(
                f"cluster {self.cluster_id}: representative {self.representative_id!r} not a member"
            )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two L2-normalized vectors; bit-identical inputs give exactly 1.0."""
    if a.shape != b.shape:
        raise ValueError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        return 1.0
    return float(np.dot(a, b))


def dedup_cluster(embeddings: list[EmbeddingVector], threshold: float) -> list[SceneCluster]:
    """Partition embeddings into scene clusters by thresholded cosine chains.

    Clusters are ordered (and numbered) by their lexicographically smallest
    member pair_id; the representative is initialized to that smallest member
    and refined later by quality scoring.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not embeddings:
        return []
    dims = {e.dim for e in embeddings}
    if len(dims) != 1:
        raise ValueError(f"embeddings have mismatched dimensions {sorted(dims)}")
    for e in embeddings:
        if e.l2_normalized and abs(float(np.linalg.norm(e.vector)) - 1.0) > 1e-6:
            raise ValueError(f"embedding for {e.pair_id!r} marked normalized but ||v|| != 1")

    order = sorted(range(len(embeddings)), key=lambda i: embeddings[i].pair_id)
    uf = _UnionFind(len(order))
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            vi = embeddings[order[i]].vector
            vj = embeddings[order[j]].vector
            if cosine_similarity(vi, vj) >= threshold:
                uf.union(i, j)

    groups: dict[int, list[str]] = {}
    for i in range(len(order)):
        groups.setdefault(uf.find(i), []).append(embeddings[order[i]].pair_id)

    clusters = []
    for cid, members in enumerate(sorted(groups.values(), key=lambda m: m[0])):
        clusters.append(SceneCluster(cluster_id=cid, member_ids=members, representative_id=members[0]))
    return clusters
