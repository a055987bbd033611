"""Compact encoder-decoder fusion network: the trainable policy.

One weight-shared downsampling encoder runs on each modality; features are
concatenated at the bottleneck and decoded with skip connections from both
branches. The final sigmoid bounds the fused image to [0, 1] for any
parameter values. A frozen deep copy of the policy serves as the reference
during fine-tuning.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .images import ensure_rgb


@dataclass
class PolicyConfig:
    channels: tuple[int, ...] = (16, 32, 64)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.channels) < 2:
            raise ValueError("policy needs at least two stages")

    @property
    def downsample_factor(self) -> int:
        return 2 ** (len(self.channels) - 1)


def _conv_block(cin: int, cout: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(nn.Conv2d(cin, cout, 3, stride=stride, padding=1), nn.GELU())


class FusionPolicy(nn.Module):
    ROLE_TRAINABLE = "trainable"
    ROLE_REFERENCE = "reference"

    def __init__(self, cfg: PolicyConfig | None = None):
        super().__init__()
        self.cfg = cfg or PolicyConfig()
        self.role = self.ROLE_TRAINABLE
        ch = self.cfg.channels
        self.stem = _conv_block(3, ch[0])
        self.downs = nn.ModuleList(_conv_block(ch[i], ch[i + 1], stride=2) for i in range(len(ch) - 1))
        # decoder mirrors the encoder; skips concatenate both modality branches
        ups = []
        for i in reversed(range(len(ch) - 1)):
            ups.append(_conv_block(ch[i + 1] + 2 * ch[i], ch[i]))
        self.ups = nn.ModuleList(ups)
        self.bottleneck = _conv_block(2 * ch[-1], ch[-1])
        self.out = nn.Conv2d(ch[0], 3, 3, padding=1)

    def _encode(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = [self.stem(x)]
        for down in self.downs:
            feats.append(down(feats[-1]))
        return feats

    def forward(self, visible: torch.Tensor, infrared: torch.Tensor) -> torch.Tensor:
        if visible.shape != infrared.shape:
            raise ValueError(f"input shape mismatch: {tuple(visible.shape)} vs {tuple(infrared.shape)}")
        factor = self.cfg.downsample_factor
        if visible.shape[-1] % factor or visible.shape[-2] % factor:
            raise ValueError(f"spatial dims must be divisible by {factor}, got {tuple(visible.shape[-2:])}")
        feats_v = self._encode(visible)
        feats_i = self._encode(infrared)
        x = self.bottleneck(torch.cat([feats_v[-1], feats_i[-1]], dim=1))
        for level, up in zip(reversed(range(len(self.downs))), self.ups):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = up(torch.cat([x, feats_v[level], feats_i[level]], dim=1))
        return torch.sigmoid(self.out(x))


def _as_input(image: np.ndarray | torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    if isinstance(image, np.ndarray):
        tensor = torch.from_numpy(np.ascontiguousarray(ensure_rgb(image))).permute(2, 0, 1)[None]
    else:
        tensor = image if image.ndim == 4 else image[None]
        if tensor.shape[1] == 1:
            tensor = tensor.expand(-1, 3, -1, -1)
    return tensor.to(dtype)


def fuse(
    policy: FusionPolicy, visible: np.ndarray | torch.Tensor, infrared: np.ndarray | torch.Tensor
) -> np.ndarray | torch.Tensor:
    """Run the policy on one (visible, infrared) pair.

    Numpy inputs give an (H, W, 3) numpy result; tensor inputs give the raw
    (B, 3, H, W) tensor, which carries gradients when the policy is trainable
    (reference policies always run under no_grad).
    """
    tensor_in = isinstance(visible, torch.Tensor)
    dtype = next(policy.parameters()).dtype
    vis = _as_input(visible, dtype)
    ir = _as_input(infrared, dtype)
    if policy.role == FusionPolicy.ROLE_REFERENCE:
        with torch.no_grad():
            fused = policy(vis, ir)
    else:
        fused = policy(vis, ir)
    if tensor_in:
        return fused
    return fused[0].permute(1, 2, 0).detach().cpu().numpy()


def clone_reference(policy: FusionPolicy) -> FusionPolicy:
    """Frozen deep copy; later updates to the original leave it untouched."""
    ref = copy.deepcopy(policy)
    ref.role = FusionPolicy.ROLE_REFERENCE
    ref.requires_grad_(False)
    ref.eval()
    return ref


def _sobel_kernels(dtype: torch.dtype) -> tuple[torch.Tensor, torch.Tensor]:
    kx = torch.tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]], dtype=dtype)
    return kx.view(1, 1, 3, 3), kx.t().view(1, 1, 3, 3)


def gradient_map(gray: torch.Tensor) -> torch.Tensor:
    """Sobel gradient magnitude of a (B, 1, H, W) grayscale batch."""
    kx, ky = _sobel_kernels(gray.dtype)
    gx = F.conv2d(F.pad(gray, (1, 1, 1, 1), mode="replicate"), kx)
    gy = F.conv2d(F.pad(gray, (1, 1, 1, 1), mode="replicate"), ky)
    return torch.sqrt(gx * gx + gy * gy + 1e-12)


_LUMA_T = (0.299, 0.587, 0.114)


def _luma(batch: torch.Tensor) -> torch.Tensor:
    w = torch.tensor(_LUMA_T, dtype=batch.dtype).view(1, 3, 1, 1)
    return (batch * w).sum(dim=1, keepdim=True)


def fusion_proxy_loss(fused: torch.Tensor, visible: torch.Tensor, infrared: torch.Tensor) -> torch.Tensor:
    """Max-intensity plus max-gradient L1 target for supervised warm-up."""
    f_gray = _luma(fused)
    v_gray = _luma(visible)
    i_gray = _luma(infrared)
    intensity_target = torch.maximum(v_gray, i_gray)
    gradient_target = torch.maximum(gradient_map(v_gray), gradient_map(i_gray))
    return (f_gray - intensity_target).abs().mean() + (gradient_map(f_gray) - gradient_target).abs().mean()


def pretrain_supervised(
    policy: FusionPolicy,
    manifest,
    epochs: int = 20,
    lr: float = 1e-3,
    batch_size: int = 4,
    seed: int = 0,
) -> tuple[FusionPolicy, list[dict]]:
    """Warm up the policy on the intensity + gradient proxy loss.

    History row 0 holds the pre-training loss; row k the loss after k epochs.
    """
    from .images import load_image

    torch.manual_seed(seed)
    dtype = next(policy.parameters()).dtype
    pairs = sorted({(t.pair_id, t.visible_path, t.infrared_path) for t in manifest.triplets})
    inputs = [
        (_as_input(load_image(v), dtype), _as_input(load_image(i), dtype)) for _, v, i in pairs
    ]
    batches = [
        (
            torch.cat([p[0] for p in inputs[i : i + batch_size]]),
            torch.cat([p[1] for p in inputs[i : i + batch_size]]),
        )
        for i in range(0, len(inputs), batch_size)
    ]
    optimizer = torch.optim.Adam(policy.parameters(), lr=lr)
    rng = random.Random(seed)

    def dataset_loss() -> float:
        with torch.no_grad():
            losses = [float(fusion_proxy_loss(policy(v, i), v, i)) * v.shape[0] for v, i in batches]
        return sum(losses) / sum(v.shape[0] for v, _ in batches)

    history = [{"epoch": 0, "loss": dataset_loss(), "lr": lr}]
    policy.train()
    for epoch in range(1, epochs + 1):
        order = list(range(len(batches)))
        rng.shuffle(order)
        for bi in order:
            vis, ir = batches[bi]
            loss = fusion_proxy_loss(policy(vis, ir), vis, ir)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite pretraining loss at epoch {epoch}: {float(loss)}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        history.append({"epoch": epoch, "loss": dataset_loss(), "lr": lr})
    policy.eval()
    return policy, history
