"""Human-feedback labels: five 1-5 scores plus circle artifact annotations.

The on-disk document is one JSON object per triplet with top-level keys
`scores` (five named entries) and `shapes` (a list of two-point circles:
first point the center, second on the circumference). Coordinates are pixel
units, origin top-left, x rightward, y downward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SCORE_KEYS = (
    "Thermal Retention",
    "Texture Preservation",
    "Artifacts",
    "Sharpness",
    "Overall Score",
)

# Top-level document keys beyond scores/shapes that parse/serialize carry
# through (workflow metadata, not part of the label itself).
_META_KEYS = ("triplet_id", "annotator", "reviewed", "auto")

BCE_EPS = 1e-6


class AnnotationSchemaError(ValueError):
    """The document does not match the annotation schema."""


@dataclass(frozen=True)
class ScoreVector:
    thermal_retention: float
    texture_preservation: float
    artifacts: float
    sharpness: float
    overall: float

    def __post_init__(self) -> None:
        for key, value in zip(SCORE_KEYS, self.as_tuple()):
            if not 1.0 <= value <= 5.0:
                raise AnnotationSchemaError(f"score {key!r} = {value} outside the 1-5 range")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.thermal_retention, self.texture_preservation, self.artifacts, self.sharpness, self.overall)


@dataclass(frozen=True)
class CircleAnnotation:
    center: tuple[float, float]
    rim_point: tuple[float, float]
    label: str = "Artifacts"

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius_sq)

    @property
    def radius_sq(self) -> float:
        dx = self.center[0] - self.rim_point[0]
        dy = self.center[1] - self.rim_point[1]
        return dx * dx + dy * dy

    def __post_init__(self) -> None:
        if self.radius_sq <= 0.0:
            raise AnnotationSchemaError(f"circle at {self.center} has zero radius")


@dataclass
class AnnotationRecord:
    triplet_id: str
    scores: ScoreVector
    shapes: list[CircleAnnotation] = field(default_factory=list)
    annotator: str = ""
    reviewed: bool = False


def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise AnnotationSchemaError(f"{what} must be a number, got {value!r}")
    return float(value)


def parse_annotation(document: str, image_dims: tuple[int, int], triplet_id: str = "") -> AnnotationRecord:
    """Parse and validate one annotation document against (H, W) image bounds."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise AnnotationSchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise AnnotationSchemaError("annotation document must be a JSON object")

    raw_scores = data.get("scores")
    if not isinstance(raw_scores, dict):
        raise AnnotationSchemaError("missing or malformed 'scores' object")
    values = []
    for key in SCORE_KEYS:
        if key not in raw_scores:
            raise AnnotationSchemaError(f"missing score key {key!r}")
        value = _require_number(raw_scores[key], f"score {key!r}")
        if not 1.0 <= value <= 5.0:
            raise AnnotationSchemaError(f"score {key!r} = {value} outside the 1-5 range")
        values.append(value)
    scores = ScoreVector(*values)

    h, w = image_dims
    shapes = []
    for i, raw in enumerate(data.get("shapes", [])):
        if not isinstance(raw, dict):
            raise AnnotationSchemaError(f"shape #{i} must be an object")
        if raw.get("shape_type") != "circle":
            raise AnnotationSchemaError(f"shape #{i}: shape_type must be 'circle', got {raw.get('shape_type')!r}")
        points = raw.get("points")
        if not isinstance(points, list) or len(points) != 2:
            raise AnnotationSchemaError(f"shape #{i}: expected exactly 2 points (center, rim)")
        (cx, cy), (rx, ry) = (
            (_require_number(p[0], f"shape #{i} x"), _require_number(p[1], f"shape #{i} y")) for p in points
        )
        if not (0 <= cx < w and 0 <= cy < h):
            raise AnnotationSchemaError(f"shape #{i}: center ({cx}, {cy}) outside {w}x{h} image bounds")
        shapes.append(CircleAnnotation(center=(cx, cy), rim_point=(rx, ry), label=str(raw.get("label", "Artifacts"))))

    return AnnotationRecord(
        triplet_id=str(data.get("triplet_id", triplet_id) or triplet_id),
        scores=scores,
        shapes=shapes,
        annotator=str(data.get("annotator", "")),
        reviewed=bool(data.get("reviewed", False)),
    )


def serialize_annotation(record: AnnotationRecord) -> str:
    doc = {
        "triplet_id": record.triplet_id,
        "annotator": record.annotator,
        "reviewed": record.reviewed,
        "scores": dict(zip(SCORE_KEYS, record.scores.as_tuple())),
        "shapes": [
            {
                "label": s.label,
                "points": [[s.center[0], s.center[1]], [s.rim_point[0], s.rim_point[1]]],
                "shape_type": "circle",
            }
            for s in record.shapes
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def rasterize_heatmap(
    shapes: list[CircleAnnotation],
    dims: tuple[int, int],
    gaussian: bool = False,
) -> np.ndarray:
    """Union-rasterize circles onto an (H, W) grid in [0, 1].

    Default is a hard binary disk: pixel (x, y) is 1 iff some circle satisfies
    (x-cx)^2 + (y-cy)^2 <= r^2. With `gaussian=True` each circle contributes
    exp(-d^2 / (2 sigma^2)) with sigma = r/2 instead, still combined by max.
    """
    h, w = dims
    if h <= 0 or w <= 0:
        raise ValueError(f"dims must be positive, got {dims}")
    grid = np.zeros((h, w), dtype=np.float64)
    if not shapes:
        return grid
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    for shape in shapes:
        cx, cy = shape.center
        d_sq = (xs - cx) ** 2 + (ys - cy) ** 2
        if gaussian:
            sigma = shape.radius / 2.0
            contribution = np.exp(-d_sq / (2.0 * sigma * sigma))
        else:
            contribution = (d_sq <= shape.radius_sq).astype(np.float64)
        np.maximum(grid, contribution, out=grid)
    return grid


def normalize_scores(scores: ScoreVector) -> np.ndarray:
    """Map the five 1-5 scores onto [0, 1]^5 via (s - 1) / 4."""
    return (np.array(scores.as_tuple(), dtype=np.float64) - 1.0) / 4.0


def denormalize_scores(normalized) -> ScoreVector:
    """Inverse of normalize_scores: 1 + 4 * s."""
    values = 1.0 + 4.0 * np.asarray(normalized, dtype=np.float64)
    return ScoreVector(*[float(v) for v in values])


def annotation_discrepancy(
    a: AnnotationRecord,
    b: AnnotationRecord,
    dims: tuple[int, int],
) -> tuple[float, float]:
    """Composite disagreement between two annotations of the same triplet.

    Returns (score_err, heatmap_err): mean squared difference of the
    normalized score vectors, and mean binary cross-entropy between the two
    rasterized heatmaps, each grid clamped to [eps, 1-eps] before the logs.
    """
    if a.triplet_id != b.triplet_id:
        raise ValueError(f"triplet_id mismatch: {a.triplet_id!r} vs {b.triplet_id!r}")
    score_err = float(np.mean((normalize_scores(a.scores) - normalize_scores(b.scores)) ** 2))
    grid_a = np.clip(rasterize_heatmap(a.shapes, dims), BCE_EPS, 1.0 - BCE_EPS)
    grid_b = np.clip(rasterize_heatmap(b.shapes, dims), BCE_EPS, 1.0 - BCE_EPS)
    bce = -(grid_b * np.log(grid_a) + (1.0 - grid_b) * np.log(1.0 - grid_a))
    return score_err, float(bce.mean())
