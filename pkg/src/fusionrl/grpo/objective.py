"""Region rewards, policy-change ratios, and the clipped GRPO objective.

The per-region ratio r_k = 1 + alpha * ||(F_new - F_old) . M_k||_1 /
||F_old . M_k||_1 is structurally >= 1, so only the upper clip bound can
bind. The objective J = surrogate - beta * KL treats advantages as
constants; gradients reach the policy only through the ratios and the KL
term. KL between the deterministic image policies is modeled as an
isotropic-Gaussian surrogate, mean((F_theta - F_ref)^2) / (2 sigma_kl^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..images import ensure_rgb
from ..reward.model import OVERALL_INDEX, RewardModel

REWARD_MODES = ("overall", "penalized")
RATIO_DENOM_GUARD = 1e-8


@dataclass
class GrpoConfig:
    beta: float = 0.1
    eps_clip: float = 0.2
    eps_adv: float = 1e-8
    alpha: float = 1.0
    region_weights: str = "area"  # or "uniform"
    lr: float = 1e-4
    weight_decay: float = 0.01
    batch_size: int = 2
    epochs: int = 20
    lr_min: float = 1e-6
    sigma_kl: float = 0.1
    updates_per_batch: int = 2
    refresh_interval: int = 0  # 0 = reference fixed for the whole run
    reward_mode: str = "overall"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0.0 < self.eps_clip < 1.0:
            raise ValueError("eps_clip must be in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.region_weights not in ("area", "uniform"):
            raise ValueError(f"unknown region_weights {self.region_weights!r}")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward_mode {self.reward_mode!r}")
        if self.updates_per_batch < 1:
            raise ValueError("updates_per_batch must be >= 1")


def region_reward(
    reward_model: RewardModel,
    visible: np.ndarray,
    infrared: np.ndarray,
    fused: np.ndarray,
    mask: np.ndarray,
    mode: str = "overall",
) -> float:
    """Score one region: mask all three images, run the reward model.

    `overall` returns the predicted overall score; `penalized` subtracts the
    mean predicted artifact probability inside the mask.
    """
    if mode not in REWARD_MODES:
        raise ValueError(f"unknown reward mode {mode!r}")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("region mask is empty")
    m = mask[:, :, None].astype(np.float64)
    output = reward_model.score_triplet(
        ensure_rgb(visible) * m, ensure_rgb(infrared) * m, ensure_rgb(fused) * m
    )
    overall = float(output.scores[OVERALL_INDEX])
    if mode == "overall":
        return overall
    heatmap = output.heatmap
    if heatmap.shape != mask.shape:
        heat_t = torch.from_numpy(heatmap)[None, None]
        heatmap = torch.nn.functional.interpolate(
            heat_t, size=mask.shape, mode="bilinear", align_corners=False
        )[0, 0].numpy()
    return overall - float(heatmap[mask].mean())


def region_ratio(
    f_new: torch.Tensor, f_old: torch.Tensor, mask: torch.Tensor | np.ndarray, alpha: float = 1.0
) -> torch.Tensor:
    """Per-region policy-change ratio; differentiable through f_new."""
    if f_new.shape != f_old.shape:
        raise ValueError(f"image shape mismatch: {tuple(f_new.shape)} vs {tuple(f_old.shape)}")
    if isinstance(mask, np.ndarray):
        mask = torch.from_numpy(mask)
    mask = mask.to(f_new.dtype)
    while mask.ndim < f_new.ndim:
        mask = mask.unsqueeze(0)
    if not bool((mask > 0).any()):
        raise ValueError("region mask is empty")
    denom = (f_old * mask).abs().sum()
    if float(denom.detach()) < RATIO_DENOM_GUARD:
        return torch.ones((), dtype=f_new.dtype)
    numer = ((f_new - f_old) * mask).abs().sum()
    return 1.0 + alpha * numer / denom


def region_weights(masks: list[np.ndarray], scheme: str) -> np.ndarray:
    """Normalized region weights: uniform or area-proportional."""
    if scheme == "uniform":
        return np.full(len(masks), 1.0 / len(masks))
    areas = np.array([float(np.asarray(m).sum()) for m in masks])
    return areas / areas.sum()


def grpo_objective(
    masks: list[np.ndarray],
    advantages,
    ratios: list[torch.Tensor],
    f_theta: torch.Tensor,
    f_ref: torch.Tensor,
    cfg: GrpoConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(J, surrogate, kl) for one sample; maximize J.

    surrogate = sum_k w_k * min(r_k * A_k, clip(r_k, 1-eps, 1+eps) * A_k)
    with advantages treated as constants.
    """
    advantages = np.asarray(advantages, dtype=np.float64).reshape(-1)
    if not (len(masks) == len(advantages) == len(ratios)):
        raise ValueError(
            f"region count mismatch: {len(masks)} masks, {len(advantages)} advantages, {len(ratios)} ratios"
        )
    weights = region_weights(masks, cfg.region_weights)
    dtype = f_theta.dtype
    surrogate = torch.zeros((), dtype=dtype)
    for w, adv, ratio in zip(weights, advantages, ratios):
        if not isinstance(ratio, torch.Tensor):
            ratio = torch.as_tensor(ratio, dtype=dtype)
        clipped = torch.clamp(ratio, 1.0 - cfg.eps_clip, 1.0 + cfg.eps_clip)
        surrogate = surrogate + w * torch.minimum(ratio * adv, clipped * adv)
    kl = ((f_theta - f_ref) ** 2).mean() / (2.0 * cfg.sigma_kl**2)
    return surrogate - cfg.beta * kl, surrogate, kl
