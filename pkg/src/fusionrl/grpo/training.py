"""Region-level GRPO fine-tuning of the fusion policy against the reward model.

Per batch: fuse with the current policy, segment the fused output, score
every region with the reward model, normalize to group advantages, then run
one or more ascent steps on the clipped surrogate minus the KL anchor, with
ratios measured against the batch's pre-step forward pass. Learning rate
follows cosine annealing from cfg.lr down to cfg.lr_min.
"""

from __future__ import annotations

import csv
import os
import random

import numpy as np
import torch

from ..images import load_image, save_image
from ..policy import FusionPolicy, _as_input, clone_reference
from ..reward.model import RewardModel
from ..reward.training import cosine_lr
from .advantage import group_advantage
from .objective import GrpoConfig, grpo_objective, region_ratio, region_reward
from .segmentation import RegionSet, segment_regions

HISTORY_COLUMNS = ("epoch", "mean_reward", "surrogate", "kl", "lr")


def _to_numpy_image(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().permute(1, 2, 0).cpu().numpy()


def _mean_whole_image_reward(
    policy: FusionPolicy, reward_model: RewardModel, inputs: list[tuple[torch.Tensor, torch.Tensor]]
) -> float:
    """Mean overall reward of the policy's fused outputs, whole frame."""
    rewards = []
    with torch.no_grad():
        for vis, ir in inputs:
            fused = policy(vis, ir)
            mask = np.ones(fused.shape[-2:], dtype=bool)
            rewards.append(
                region_reward(
                    reward_model,
                    _to_numpy_image(vis[0]),
                    _to_numpy_image(ir[0]),
                    _to_numpy_image(fused[0]),
                    mask,
                    mode="overall",
                )
            )
    return float(np.mean(rewards))


def save_history_csv(history: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for row in history:
            writer.writerow([row[c] for c in HISTORY_COLUMNS])


def finetune_grpo(
    policy: FusionPolicy,
    reward_model: RewardModel,
    manifest,
    cfg: GrpoConfig,
    segmenter: str = "grid",
    k_target: int = 4,
    sample_dir: str | os.PathLike | None = None,
) -> tuple[FusionPolicy, list[dict]]:
    """Fine-tune the policy; returns it with the per-epoch history.

    History row 0 is the pre-training whole-image reward; rows 1..epochs add
    the mean surrogate and KL seen during that epoch. The reference policy is
    snapshotted at run start and refreshed every cfg.refresh_interval epochs
    if that is nonzero.
    """
    torch.manual_seed(cfg.seed)
    dtype = next(policy.parameters()).dtype
    pairs = sorted({(t.pair_id, t.visible_path, t.infrared_path) for t in manifest.triplets})
    inputs = [(_as_input(load_image(v), dtype), _as_input(load_image(i), dtype)) for _, v, i in pairs]
    if not inputs:
        raise ValueError("manifest contains no source pairs")

    reference = clone_reference(policy)
    optimizer = torch.optim.AdamW(policy.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    batches = [inputs[i : i + cfg.batch_size] for i in range(0, len(inputs), cfg.batch_size)]
    total_steps = cfg.epochs * len(batches) * cfg.updates_per_batch
    rng = random.Random(cfg.seed)

    history = [
        {
            "epoch": 0,
            "mean_reward": _mean_whole_image_reward(policy, reward_model, inputs),
            "surrogate": 0.0,
            "kl": 0.0,
            "lr": cfg.lr,
        }
    ]

    step = 0
    lr = cfg.lr
    for epoch in range(1, cfg.epochs + 1):
        if cfg.refresh_interval and epoch > 1 and (epoch - 1) % cfg.refresh_interval == 0:
            reference = clone_reference(policy)
        epoch_surrogate: list[float] = []
        epoch_kl: list[float] = []
        batch_order = list(range(len(batches)))
        rng.shuffle(batch_order)
        for bi in batch_order:
            batch = batches[bi]
            vis = torch.cat([v for v, _ in batch])
            ir = torch.cat([i for _, i in batch])
            with torch.no_grad():
                f_old = policy(vis, ir)
                f_ref = reference(vis, ir)

            regions: list[RegionSet] = []
            advantages = []
            for b in range(vis.shape[0]):
                fused_np = _to_numpy_image(f_old[b])
                region_set = segment_regions(fused_np, segmenter, k_target)
                scores = [
                    region_reward(
                        reward_model,
                        _to_numpy_image(vis[b]),
                        _to_numpy_image(ir[b]),
                        fused_np,
                        mask,
                        mode=cfg.reward_mode,
                    )
                    for mask in region_set.masks
                ]
                regions.append(region_set)
                advantages.append(group_advantage(scores, cfg.eps_adv))

            for _ in range(cfg.updates_per_batch):
                f_theta = policy(vis, ir)
                j_terms, surr_terms, kl_terms = [], [], []
                for b in range(vis.shape[0]):
                    ratios = [
                        region_ratio(f_theta[b], f_old[b], mask, cfg.alpha) for mask in regions[b].masks
                    ]
                    j, surr, kl = grpo_objective(
                        regions[b].masks, advantages[b].advantages, ratios, f_theta[b], f_ref[b], cfg
                    )
                    j_terms.append(j)
                    surr_terms.append(surr)
                    kl_terms.append(kl)
                objective = torch.stack(j_terms).mean()
                if not torch.isfinite(objective):
                    detail = [
                        {
                            "sample": b,
                            "scores": advantages[b].scores.tolist(),
                            "advantages": advantages[b].advantages.tolist(),
                        }
                        for b in range(vis.shape[0])
                    ]
                    raise RuntimeError(f"non-finite GRPO objective at epoch {epoch}: {detail}")
                lr = cosine_lr(step, total_steps, cfg.lr, cfg.lr_min)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                optimizer.zero_grad()
                (-objective).backward()
                optimizer.step()
                step += 1
                epoch_surrogate.append(float(torch.stack([s.detach() for s in surr_terms]).mean()))
                epoch_kl.append(float(torch.stack([k.detach() for k in kl_terms]).mean()))

        history.append(
            {
                "epoch": epoch,
                "mean_reward": _mean_whole_image_reward(policy, reward_model, inputs),
                "surrogate": float(np.mean(epoch_surrogate)),
                "kl": float(np.mean(epoch_kl)),
                "lr": lr,
            }
        )
        if sample_dir is not None:
            os.makedirs(sample_dir, exist_ok=True)
            with torch.no_grad():
                sample = policy(*inputs[0])
            save_image(os.path.join(sample_dir, f"epoch_{epoch:03d}.png"), _to_numpy_image(sample[0]))

    return policy, history
