from .dedup import SceneCluster, cosine_similarity, dedup_cluster
from .embeddings import DegenerateEmbeddingError, Embedder, EmbeddingVector, GrayDownsampleEmbedder, embed_visible
from .manifest import ImageTriplet, Manifest, assemble_manifest, load_manifest, save_manifest
from .pairs import ImagePair, discover_pairs
from .quality import QualityScore, quality_score, score_cluster, select_representative

__all__ = [
    "DegenerateEmbeddingError",
    "Embedder",
    "EmbeddingVector",
    "GrayDownsampleEmbedder",
    "ImagePair",
    "ImageTriplet",
    "Manifest",
    "QualityScore",
    "SceneCluster",
    "assemble_manifest",
    "cosine_similarity",
    "dedup_cluster",
    "discover_pairs",
    "embed_visible",
    "load_manifest",
    "quality_score",
    "save_manifest",
    "score_cluster",
    "select_representative",
]
