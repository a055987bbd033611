from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import pytest
import torch

from fusionrl.annotations import AnnotationRecord, CircleAnnotation, ScoreVector, serialize_annotation
from fusionrl.data import ImagePair, Manifest, assemble_manifest, save_manifest
from fusionrl.images import save_image

N_PAIRS = 8
SIZE = 32
METHOD = "toyfuse"


def synthetic_pair(index: int, size: int = SIZE) -> tuple[np.ndarray, np.ndarray]:
    """A smooth deterministic (visible RGB, infrared gray) pair."""
    rng = np.random.default_rng(1000 + index)
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    a, b, c = rng.uniform(2.0, 7.0, size=3)
    phase = rng.uniform(0, 2 * math.pi, size=3)
    base = 0.5 + 0.25 * np.sin(a * xx * math.pi + phase[0]) + 0.25 * np.cos(b * yy * math.pi + phase[1])
    visible = np.stack(
        [
            np.clip(base, 0, 1),
            np.clip(0.5 + 0.3 * np.sin(c * (xx + yy) * math.pi + phase[2]), 0, 1),
            np.clip(1.0 - base, 0, 1),
        ],
        axis=2,
    )
    # infrared: a couple of hot blobs over a dark background
    infrared = 0.15 + 0.1 * np.cos(b * xx * math.pi)
    for _ in range(2):
        cy, cx = rng.uniform(0.2, 0.8, size=2) * size
        r = rng.uniform(0.1, 0.2) * size
        infrared = np.maximum(infrared, np.exp(-(((yy * size - cy) ** 2 + (xx * size - cx) ** 2) / (2 * r * r))))
    return visible, np.clip(infrared, 0, 1)


def synthetic_annotation(
    triplet_id: str, index: int, fused: np.ndarray, infrared: np.ndarray, size: int = SIZE
) -> AnnotationRecord:
    """Scores derived from fused-image statistics so a toy reward model has
    real structure to learn (instead of an unlearnable constant)."""
    rng = np.random.default_rng(2000 + index)
    gray = fused.mean(axis=2)
    hot = infrared > 0.5

    def to_score(x: float) -> float:
        return float(min(5.0, max(1.0, 1.0 + 4.0 * x)))

    thermal = to_score(float(gray[hot].mean()) if hot.any() else 0.5)
    texture = to_score(4.0 * float(gray.std()))
    gy, gx = np.gradient(gray)
    sharpness = to_score(6.0 * float(np.hypot(gx, gy).mean()))
    artifacts = to_score(1.0 - float(gray.max() - gray.min()))
    overall = float(np.mean([thermal, texture, artifacts, sharpness]))
    scores = ScoreVector(thermal, texture, artifacts, sharpness, overall)
    shapes = []
    if index % 2 == 0:
        cy, cx = np.unravel_index(int(np.argmax(gray)), gray.shape)
        cx = float(min(max(cx, 4), size - 5))
        cy = float(min(max(cy, 4), size - 5))
        radius = float(rng.uniform(3.0, 6.0))
        shapes.append(CircleAnnotation(center=(cx, cy), rim_point=(cx + radius, cy)))
    return AnnotationRecord(triplet_id=triplet_id, scores=scores, shapes=shapes, annotator="synthetic")


@dataclass
class ToyDataset:
    root: str
    manifest_path: str
    manifest: Manifest
    annotations_dir: str
    pair_ids: list[str]


def build_toy_dataset(root, n_pairs: int = N_PAIRS, size: int = SIZE) -> ToyDataset:
    vis_dir = os.path.join(root, "visible")
    ir_dir = os.path.join(root, "infrared")
    fused_dir = os.path.join(root, f"fused_{METHOD}")
    ann_dir = os.path.join(root, "annotations")
    for d in (vis_dir, ir_dir, fused_dir, ann_dir):
        os.makedirs(d, exist_ok=True)

    pairs = []
    pair_ids = []
    for i in range(n_pairs):
        pid = f"pair{i:02d}"
        visible, infrared = synthetic_pair(i, size)
        save_image(os.path.join(vis_dir, f"{pid}.png"), visible)
        save_image(os.path.join(ir_dir, f"{pid}.png"), infrared)
        fused = np.clip(0.5 * visible + 0.5 * infrared[:, :, None], 0, 1)
        save_image(os.path.join(fused_dir, f"{pid}.png"), fused)
        pairs.append(ImagePair.from_files(pid, os.path.join(vis_dir, f"{pid}.png"), os.path.join(ir_dir, f"{pid}.png")))
        pair_ids.append(pid)

    manifest = assemble_manifest(pairs, {METHOD: fused_dir}, (1.0, 0.0, 0.0), seed=7)
    manifest_path = os.path.join(root, "manifest.jsonl")
    save_manifest(manifest, manifest_path)

    for i, pid in enumerate(pair_ids):
        tid = f"{pid}__{METHOD}"
        visible, infrared = synthetic_pair(i, size)
        fused = np.clip(0.5 * visible + 0.5 * infrared[:, :, None], 0, 1)
        record = synthetic_annotation(tid, i, fused, infrared, size)
        with open(os.path.join(ann_dir, f"{tid}.json"), "w", encoding="utf-8") as fh:
            fh.write(serialize_annotation(record))

    return ToyDataset(
        root=str(root),
        manifest_path=manifest_path,
        manifest=manifest,
        annotations_dir=ann_dir,
        pair_ids=pair_ids,
    )


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory) -> ToyDataset:
    return build_toy_dataset(tmp_path_factory.mktemp("toyset"))


@pytest.fixture(scope="session")
def toy_reward_model(toy_dataset):
    """A briefly trained toy reward model shared by inference-only tests."""
    from fusionrl.reward import EncoderConfig, RewardTrainConfig, train_reward

    cfg = RewardTrainConfig(epochs=2, batch_size=4, seed=11)
    model, history = train_reward(
        toy_dataset.manifest,
        toy_dataset.annotations_dir,
        cfg,
        encoder_cfg=EncoderConfig(image_size=SIZE, patch_size=4, embed_dim=32, depth=2, heads=4, frozen=True),
    )
    return model


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
