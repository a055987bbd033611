"""Dual-head reward model: five quality scores plus an artifact heatmap.

The three images of a triplet go through one weight-shared patch encoder
(class token dropped), get concatenated channel-wise, linearly compressed,
and refined by a trainable fusion transformer. Its output, reshaped to a
spatial feature map, feeds a score-regression head and a progressive
upsampling heatmap head; both end in a sigmoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..images import ensure_rgb
from .encoder import EncoderConfig, PatchTransformer, TokenTransformer

NUM_SCORES = 5
OVERALL_INDEX = 4  # (thermal, texture, artifacts, sharpness, overall)


@dataclass
class TriEncoding:
    """Patch-token encodings of the infrared, visible, and fused images."""

    f_ir: torch.Tensor
    f_vi: torch.Tensor
    f_fused: torch.Tensor

    def __post_init__(self) -> None:
        if not (self.f_ir.shape == self.f_vi.shape == self.f_fused.shape):
            raise ValueError("tri-encoding tensors must share one (B, N, D) shape")


@dataclass
class RewardOutput:
    """scores in (0,1)^5 and heatmap in (0,1)^(H x W), per sample."""

    scores: np.ndarray
    heatmap: np.ndarray


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.act = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv2(self.act(self.conv1(x)))
        return self.act(x + h)


class HeatmapHead(nn.Module):
    """Channel compression, then one x2 residual upsampling stage per factor
    of two in the patch size, restoring the encoder's input resolution."""

    def __init__(self, embed_dim: int, patch_size: int):
        super().__init__()
        channels = max(4, embed_dim // 4)
        stages = int(math.log2(patch_size))
        self.compress = nn.Conv2d(embed_dim, channels, 3, padding=1)
        self.stages = nn.ModuleList(ResidualBlock(channels) for _ in range(stages))
        self.out = nn.Conv2d(channels, 1, 3, padding=1)

    def forward(self, fmap: torch.Tensor) -> torch.Tensor:
        x = self.compress(fmap)
        for stage in self.stages:
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = stage(x)
        return torch.sigmoid(self.out(x))


class ScoreHead(nn.Module):
    def __init__(self, embed_dim: int):
        super().__init__()
        mid = max(4, embed_dim // 2)
        low = max(4, embed_dim // 4)
        hidden = max(16, embed_dim)
        self.convs = nn.Sequential(
            nn.Conv2d(embed_dim, mid, 3, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(mid, low, 3, stride=2, padding=1),
            nn.GELU(),
            nn.AdaptiveAvgPool2d(2),
        )
        self.mlp = nn.Sequential(
            nn.Linear(low * 4, hidden),
            nn.GELU(),
            nn.Linear(hidden, NUM_SCORES),
        )

    def forward(self, fmap: torch.Tensor) -> torch.Tensor:
        x = self.convs(fmap).flatten(1)
        return torch.sigmoid(self.mlp(x))


class RewardModel(nn.Module):
    def __init__(self, encoder_cfg: EncoderConfig):
        super().__init__()
        self.cfg = encoder_cfg
        self.backbone = PatchTransformer(encoder_cfg)
        self.projection = nn.Linear(3 * encoder_cfg.embed_dim, encoder_cfg.embed_dim)
        self.fusion = TokenTransformer(
            encoder_cfg.num_patches, encoder_cfg.embed_dim, encoder_cfg.depth, encoder_cfg.heads
        )
        self.heatmap_head = HeatmapHead(encoder_cfg.embed_dim, encoder_cfg.patch_size)
        self.score_head = ScoreHead(encoder_cfg.embed_dim)

    # ---- spec operations -------------------------------------------------

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        """Patch tokens of one image batch, class token dropped: (B, N, D)."""
        return self.backbone(images)[:, 1:, :]

    def encode_triplet(self, visible: torch.Tensor, infrared: torch.Tensor, fused: torch.Tensor) -> TriEncoding:
        return TriEncoding(f_ir=self.encode(infrared), f_vi=self.encode(visible), f_fused=self.encode(fused))

    def fuse_features(self, enc: TriEncoding) -> torch.Tensor:
        """Concat -> linear compression -> fusion transformer -> (B, D, H', W')."""
        tokens = torch.cat([enc.f_ir, enc.f_vi, enc.f_fused], dim=-1)
        tokens = self.projection(tokens)
        tokens = self.fusion(tokens)
        b, n, d = tokens.shape
        side = self.cfg.grid_size
        if n != side * side:
            raise ValueError(f"token count {n} does not match {side}x{side} grid")
        return tokens.transpose(1, 2).reshape(b, d, side, side)

    def predict_heatmap(self, fmap: torch.Tensor) -> torch.Tensor:
        return self.heatmap_head(fmap)

    def predict_scores(self, fmap: torch.Tensor) -> torch.Tensor:
        return self.score_head(fmap)

    def forward(
        self, visible: torch.Tensor, infrared: torch.Tensor, fused: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        fmap = self.fuse_features(self.encode_triplet(visible, infrared, fused))
        return self.predict_scores(fmap), self.predict_heatmap(fmap)

    # ---- convenience -----------------------------------------------------

    def trainable_parameters(self):
        return (p for p in self.parameters() if p.requires_grad)

    def head_parameters(self):
        yield from self.score_head.parameters()
        yield from self.heatmap_head.parameters()

    def prepare_image(self, image: np.ndarray | torch.Tensor) -> torch.Tensor:
        """Numpy (H, W[, C]) or tensor -> (1, 3, S, S) resized model input."""
        if isinstance(image, np.ndarray):
            tensor = torch.from_numpy(np.ascontiguousarray(ensure_rgb(image))).permute(2, 0, 1)[None]
        else:
            tensor = image
            if tensor.ndim == 3:
                tensor = tensor[None]
            if tensor.shape[1] == 1:
                tensor = tensor.expand(-1, 3, -1, -1)
        tensor = tensor.to(next(self.parameters()).dtype)
        size = self.cfg.image_size
        if tensor.shape[-2:] != (size, size):
            tensor = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
        return tensor

    @torch.no_grad()
    def score_triplet(
        self, visible: np.ndarray | torch.Tensor, infrared: np.ndarray | torch.Tensor, fused: np.ndarray | torch.Tensor
    ) -> RewardOutput:
        """Single-triplet inference from raw images; returns numpy outputs."""
        was_training = self.training
        self.eval()
        try:
            scores, heatmap = self(
                self.prepare_image(visible), self.prepare_image(infrared), self.prepare_image(fused)
            )
        finally:
            self.train(was_training)
        return RewardOutput(
            scores=scores[0].detach().cpu().numpy(),
            heatmap=heatmap[0, 0].detach().cpu().numpy(),
        )
