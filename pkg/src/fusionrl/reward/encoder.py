"""Patch-transformer encoders for the reward model.

`PatchTransformer` is a standard from-scratch ViT: conv patch embedding,
class token, learned positional embeddings, pre-norm attention blocks.
`TokenTransformer` is the same block stack operating directly on token
sequences; the cross-modal fusion encoder is one of these with fresh
positional embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn


@dataclass
class EncoderConfig:
    image_size: int = 32
    patch_size: int = 4
    embed_dim: int = 32
    depth: int = 2
    heads: int = 4
    frozen: bool = False

    def __post_init__(self) -> None:
        if self.image_size % self.patch_size != 0:
            raise ValueError(f"image_size {self.image_size} not divisible by patch_size {self.patch_size}")
        if self.embed_dim % self.heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.patch_size & (self.patch_size - 1) != 0:
            raise ValueError(f"patch_size must be a power of two for the upsampling head, got {self.patch_size}")

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid_size**2


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_ratio: int = 4):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * mlp_ratio),
            nn.GELU(),
            nn.Linear(dim * mlp_ratio, dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        attn_out, _ = self.attn(h, h, h, need_weights=False)
        x = x + attn_out
        x = x + self.mlp(self.norm2(x))
        return x


class TokenTransformer(nn.Module):
    """Transformer over a fixed-length token sequence with learned positions."""

    def __init__(self, num_tokens: int, dim: int, depth: int, heads: int):
        super().__init__()
        self.pos_embedding = nn.Parameter(torch.zeros(1, num_tokens, dim))
        nn.init.trunc_normal_(self.pos_embedding, std=0.02)
        self.blocks = nn.ModuleList(TransformerBlock(dim, heads) for _ in range(depth))
        self.norm = nn.LayerNorm(dim)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[1] != self.pos_embedding.shape[1]:
            raise ValueError(
                f"expected {self.pos_embedding.shape[1]} tokens, got {tokens.shape[1]}"
            )
        x = tokens + self.pos_embedding
        for block in self.blocks:
            x = block(x)
        return self.norm(x)


class PatchTransformer(nn.Module):
    """ViT-style image encoder returning the class token plus patch tokens."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.patch_embed = nn.Conv2d(3, cfg.embed_dim, kernel_size=cfg.patch_size, stride=cfg.patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.embed_dim))
        self.pos_embedding = nn.Parameter(torch.zeros(1, cfg.num_patches + 1, cfg.embed_dim))
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        nn.init.trunc_normal_(self.pos_embedding, std=0.02)
        self.blocks = nn.ModuleList(TransformerBlock(cfg.embed_dim, cfg.heads) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(cfg.embed_dim)
        if cfg.frozen:
            self.requires_grad_(False)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """(B, 3, S, S) -> (B, 1 + N, D); token 0 is the class token."""
        b, c, h, w = images.shape
        if c != 3 or h != self.cfg.image_size or w != self.cfg.image_size:
            raise ValueError(
                f"expected (B, 3, {self.cfg.image_size}, {self.cfg.image_size}) input, got {tuple(images.shape)}"
            )
        tokens = self.patch_embed(images).flatten(2).transpose(1, 2)  # (B, N, D), row-major patches
        cls = self.cls_token.expand(b, -1, -1)
        x = torch.cat([cls, tokens], dim=1) + self.pos_embedding
        for block in self.blocks:
            x = block(x)
        return self.norm(x)
