"""Visible-image embeddings used for duplicate-scene detection.

The embedder is pluggable: anything that maps an image array to a fixed-size
real vector works. The default is a tiny 8x8 grayscale downsample so the
whole pipeline runs without pretrained weights; a production deployment can
wrap an external embedding model behind the same callable signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from ..images import block_mean_downsample, to_grayscale
from .pairs import ImagePair


class DegenerateEmbeddingError(Exception):
    """The embedder returned a (near-)zero vector that cannot be normalized."""


class Embedder(Protocol):
    def __call__(self, image: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class EmbeddingVector:
    pair_id: str
    vector: np.ndarray
    l2_normalized: bool = True

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


class GrayDownsampleEmbedder:
    """Default embedder: grayscale block-mean downsample, flattened.

    grid=8 gives a 64-dim vector. Deterministic and weight-free.
    """

    def __init__(self, grid: int = 8):
        self.grid = grid

    def __call__(self, image: np.ndarray) -> np.ndarray:
        return block_mean_downsample(to_grayscale(image), self.grid).reshape(-1)


def embed_visible(pair: ImagePair, embedder: Callable[[np.ndarray], np.ndarray] | None = None) -> EmbeddingVector:
    """Embed the visible image of a pair and L2-normalize the result."""
    if embedder is None:
        embedder = GrayDownsampleEmbedder()
    vec = np.asarray(embedder(pair.visible()), dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise DegenerateEmbeddingError(
            f"embedder produced a zero vector for pair {pair.pair_id!r}; cannot L2-normalize"
        )
    return EmbeddingVector(pair_id=pair.pair_id, vector=vec / norm, l2_normalized=True)
