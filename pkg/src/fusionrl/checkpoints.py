"""Single-archive checkpoint container shared by the reward model and policy.

Each checkpoint carries a mandatory version field, a kind tag, the config
needed to rebuild the module, and the named parameter tensors.
"""

from __future__ import annotations

import os
from dataclasses import asdict

import torch

CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path: str | os.PathLike, kind: str, config: dict, module: torch.nn.Module) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config,
        "state_dict": module.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path: str | os.PathLike, kind: str) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(payload, dict) or "version" not in payload:
        raise CheckpointError(f"{os.fspath(path)!r} is not a versioned checkpoint archive")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload['version']}")
    if payload.get("kind") != kind:
        raise CheckpointError(f"expected a {kind!r} checkpoint, found {payload.get('kind')!r}")
    return payload


def save_reward_model(path: str | os.PathLike, model) -> None:
    save_checkpoint(path, "reward", asdict(model.cfg), model)


def load_reward_model(path: str | os.PathLike):
    from .reward.encoder import EncoderConfig
    from .reward.model import RewardModel

    payload = load_checkpoint(path, "reward")
    model = RewardModel(EncoderConfig(**payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def save_policy(path: str | os.PathLike, policy) -> None:
    save_checkpoint(path, "policy", asdict(policy.cfg), policy)


def load_policy(path: str | os.PathLike):
    from .policy import FusionPolicy, PolicyConfig

    payload = load_checkpoint(path, "policy")
    cfg = payload["config"].copy()
    cfg["channels"] = tuple(cfg["channels"])
    policy = FusionPolicy(PolicyConfig(**cfg))
    policy.load_state_dict(payload["state_dict"])
    return policy
