"""Reward-model training: joint score + heatmap regression.

The backbone stays frozen; only the projection, fusion transformer, and the
two heads receive gradient updates. The learning rate follows cosine
annealing between the configured endpoints, evaluated per optimizer step so
the first step runs at lr_max and the last exactly at lr_min.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass

import numpy as np
import torch

from ..annotations import AnnotationRecord, normalize_scores, parse_annotation, rasterize_heatmap
from ..images import load_image, spatial_dims
from .encoder import EncoderConfig
from .model import RewardModel


@dataclass
class RewardTrainConfig:
    lambda_score: float = 1.0
    lambda_heatmap: float = 1.0
    epochs: int = 30
    lr_max: float = 2e-5
    lr_min: float = 1e-5
    weight_decay: float = 2e-3
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lambda_score <= 0 or self.lambda_heatmap <= 0:
            raise ValueError("loss weights must be positive")


def cosine_lr(step: int, total_steps: int, lr_max: float, lr_min: float) -> float:
    """Cosine annealing hitting lr_max at step 0 and lr_min at the last step."""
    if total_steps <= 1:
        return lr_max
    t = min(step, total_steps - 1) / (total_steps - 1)
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t))


def reward_loss(
    pred_scores: torch.Tensor,
    pred_heatmap: torch.Tensor,
    target_scores: torch.Tensor,
    target_heatmap: torch.Tensor,
    cfg: RewardTrainConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, score_loss, heatmap_loss).

    score_loss sums the five per-dimension MSEs (each averaged over the
    batch); heatmap_loss is the MSE averaged over every pixel.
    """
    if pred_scores.shape != target_scores.shape:
        raise ValueError(f"score shape mismatch: {tuple(pred_scores.shape)} vs {tuple(target_scores.shape)}")
    if pred_heatmap.shape != target_heatmap.shape:
        raise ValueError(f"heatmap shape mismatch: {tuple(pred_heatmap.shape)} vs {tuple(target_heatmap.shape)}")
    score_loss = ((pred_scores - target_scores) ** 2).mean(dim=0).sum()
    heatmap_loss = ((pred_heatmap - target_heatmap) ** 2).mean()
    total = cfg.lambda_score * score_loss + cfg.lambda_heatmap * heatmap_loss
    return total, score_loss, heatmap_loss


def load_annotations(directory: str | os.PathLike, manifest) -> dict[str, AnnotationRecord]:
    """Read {triplet_id}.json documents for every manifest triplet present."""
    records: dict[str, AnnotationRecord] = {}
    for t in manifest.triplets:
        path = os.path.join(os.fspath(directory), f"{t.triplet_id}.json")
        if not os.path.exists(path):
            continue
        dims = spatial_dims(load_image(t.fused_path))
        with open(path, "r", encoding="utf-8") as fh:
            records[t.triplet_id] = parse_annotation(fh.read(), dims, triplet_id=t.triplet_id)
    return records


def build_training_batch(
    triplets,
    annotations: dict[str, AnnotationRecord],
    model: RewardModel,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Stack model inputs and regression targets for a list of triplets."""
    vis, ir, fus, scores, heatmaps = [], [], [], [], []
    size = model.cfg.image_size
    for t in triplets:
        record = annotations[t.triplet_id]
        fused_img = load_image(t.fused_path)
        dims = spatial_dims(fused_img)
        vis.append(model.prepare_image(load_image(t.visible_path)))
        ir.append(model.prepare_image(load_image(t.infrared_path)))
        fus.append(model.prepare_image(fused_img))
        scores.append(torch.from_numpy(normalize_scores(record.scores)))
        label = torch.from_numpy(rasterize_heatmap(record.shapes, dims))[None, None]
        if label.shape[-2:] != (size, size):
            label = torch.nn.functional.interpolate(label, size=(size, size), mode="nearest")
        heatmaps.append(label)
    dtype = next(model.parameters()).dtype
    return (
        torch.cat(vis),
        torch.cat(ir),
        torch.cat(fus),
        torch.stack(scores).to(dtype),
        torch.cat(heatmaps).to(dtype),
    )


@torch.no_grad()
def _dataset_loss(model: RewardModel, batches, cfg: RewardTrainConfig) -> tuple[float, float, float]:
    totals = np.zeros(3)
    count = 0
    for vis, ir, fus, t_scores, t_heat in batches:
        scores, heat = model(vis, ir, fus)
        total, s, h = reward_loss(scores, heat, t_scores, t_heat, cfg)
        n = vis.shape[0]
        totals += np.array([float(total), float(s), float(h)]) * n
        count += n
    return tuple(totals / max(count, 1))


def train_reward(
    manifest,
    annotations: dict[str, AnnotationRecord] | str | os.PathLike,
    cfg: RewardTrainConfig,
    encoder_cfg: EncoderConfig | None = None,
    model: RewardModel | None = None,
    split: str = "train",
) -> tuple[RewardModel, list[dict]]:
    """Train score + heatmap heads over annotated manifest triplets.

    History row 0 is the pre-training loss over the training set; row k the
    loss after k epochs. The frozen backbone is never touched by the
    optimizer, so its parameters are bit-identical before and after.
    """
    torch.manual_seed(cfg.seed)
    if model is None:
        model = RewardModel(encoder_cfg or EncoderConfig(frozen=True))

    triplets = manifest.by_split(split) or manifest.triplets
    if isinstance(annotations, (str, os.PathLike)):
        annotations = load_annotations(annotations, manifest)
    missing = [t.triplet_id for t in triplets if t.triplet_id not in annotations]
    if missing:
        raise ValueError(f"missing annotations for triplets: {missing}")

    order = sorted(triplets, key=lambda t: t.triplet_id)
    batches = [
        build_training_batch(order[i : i + cfg.batch_size], annotations, model)
        for i in range(0, len(order), cfg.batch_size)
    ]

    params = list(model.trainable_parameters())
    optimizer = torch.optim.AdamW(params, lr=cfg.lr_max, weight_decay=cfg.weight_decay)
    total_steps = cfg.epochs * len(batches)
    rng = random.Random(cfg.seed)

    history = []
    total0, s0, h0 = _dataset_loss(model, batches, cfg)
    history.append({"epoch": 0, "total_loss": total0, "score_loss": s0, "heatmap_loss": h0, "lr": cfg.lr_max})

    step = 0
    lr = cfg.lr_max
    model.train()
    for epoch in range(1, cfg.epochs + 1):
        batch_order = list(range(len(batches)))
        rng.shuffle(batch_order)
        for bi in batch_order:
            vis, ir, fus, t_scores, t_heat = batches[bi]
            lr = cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min)
            for group in optimizer.param_groups:
                group["lr"] = lr
            scores, heat = model(vis, ir, fus)
            total, s, h = reward_loss(scores, heat, t_scores, t_heat, cfg)
            if not torch.isfinite(total):
                raise RuntimeError(
                    f"non-finite reward loss at epoch {epoch} step {step}: "
                    f"total={float(total)} score={float(s)} heatmap={float(h)}"
                )
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            step += 1
        total_e, s_e, h_e = _dataset_loss(model, batches, cfg)
        history.append({"epoch": epoch, "total_loss": total_e, "score_loss": s_e, "heatmap_loss": h_e, "lr": lr})
    model.eval()
    return model, history
