"""Fusion-triplet manifest: assembly, split assignment, and JSONL round-trip.

A manifest row ties a retained source pair to one fused output of one fusion
method, with a train/val/test split drawn by seeded shuffle. Missing fused
files and dimension mismatches go into a skip report instead of being
silently dropped.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass, field

from ..images import load_image, spatial_dims
from .pairs import ImagePair

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ImageTriplet:
    triplet_id: str
    pair_id: str
    visible_path: str
    infrared_path: str
    fused_path: str
    fusion_method: str
    split: str

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"triplet {self.triplet_id!r}: unknown split {self.split!r}")


@dataclass
class Manifest:
    triplets: list[ImageTriplet]
    skipped: list[dict] = field(default_factory=list)

    def by_split(self, split: str) -> list[ImageTriplet]:
        return [t for t in self.triplets if t.split == split]

    def get(self, triplet_id: str) -> ImageTriplet:
        for t in self.triplets:
            if t.triplet_id == triplet_id:
                return t
        raise KeyError(f"triplet {triplet_id!r} not in manifest")


def _split_counts(n: int, fractions: tuple[float, float, float]) -> list[int]:
    """Largest-remainder allocation of n items to the three splits."""
    if abs(sum(fractions) - 1.0) > 1e-6:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    exact = [n * f for f in fractions]
    counts = [int(x) for x in exact]
    remainders = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in range(n - sum(counts)):
        counts[remainders[i % 3]] += 1
    return counts


def assemble_manifest(
    pairs: list[ImagePair],
    fused_dirs: dict[str, str],
    split_fractions: tuple[float, float, float],
    seed: int,
    exclude: set[str] | None = None,
) -> Manifest:
    """Build the triplet manifest from retained pairs and fused output dirs.

    Each fused directory must contain one image per pair, matched by filename
    stem. Missing files and fused/source dimension mismatches are recorded in
    the skip report.
    """
    exclude = exclude or set()
    candidates: list[tuple[str, str, ImagePair, str]] = []
    skipped: list[dict] = []
    for method in sorted(fused_dirs):
        directory = fused_dirs[method]
        stems: dict[str, str] = {}
        for name in sorted(os.listdir(directory)):
            path = os.path.join(directory, name)
            if os.path.isfile(path):
                stems.setdefault(os.path.splitext(name)[0], path)
        for pair in sorted(pairs, key=lambda p: p.pair_id):
            if pair.pair_id in exclude:
                continue
            fused_path = stems.get(pair.pair_id)
            triplet_id = f"{pair.pair_id}__{method}"
            if fused_path is None:
                skipped.append(
                    {"triplet_id": triplet_id, "reason": f"no fused image for {pair.pair_id!r} in {directory!r}"}
                )
                continue
            fh, fw = spatial_dims(load_image(fused_path))
            if (fh, fw) != (pair.height, pair.width):
                skipped.append(
                    {
                        "triplet_id": triplet_id,
                        "reason": f"fused {fh}x{fw} does not match source {pair.height}x{pair.width}",
                    }
                )
                continue
            candidates.append((triplet_id, fused_path, pair, method))

    candidates.sort(key=lambda c: c[0])
    rng = random.Random(seed)
    shuffled = candidates[:]
    rng.shuffle(shuffled)
    counts = _split_counts(len(shuffled), split_fractions)
    splits: dict[str, str] = {}
    idx = 0
    for split, count in zip(SPLITS, counts):
        for _ in range(count):
            splits[shuffled[idx][0]] = split
            idx += 1

    triplets = [
        ImageTriplet(
            triplet_id=tid,
            pair_id=pair.pair_id,
            visible_path=pair.visible_path,
            infrared_path=pair.infrared_path,
            fused_path=fused_path,
            fusion_method=method,
            split=splits[tid],
        )
        for tid, fused_path, pair, method in candidates
    ]
    return Manifest(triplets=triplets, skipped=skipped)


def save_manifest(manifest: Manifest, path: str | os.PathLike) -> None:
    """Write line-delimited JSON records; the skip report goes next to it."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in manifest.triplets:
            fh.write(json.dumps(asdict(t), sort_keys=True) + "\n")
    if manifest.skipped:
        with open(f"{os.fspath(path)}.skipped.json", "w", encoding="utf-8") as fh:
            json.dump(manifest.skipped, fh, indent=2, sort_keys=True)


def load_manifest(path: str | os.PathLike) -> Manifest:
    triplets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            triplets.append(ImageTriplet(**rec))
    skipped_path = f"{os.fspath(path)}.skipped.json"
    skipped = []
    if os.path.exists(skipped_path):
        with open(skipped_path, "r", encoding="utf-8") as fh:
            skipped = json.load(fh)
    return Manifest(triplets=triplets, skipped=skipped)
