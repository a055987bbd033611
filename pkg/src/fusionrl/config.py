"""Structured run configuration: one YAML document, strict keys.

Sections mirror the pipeline stages (data, reward, policy, grpo, metrics,
service). Unknown keys are rejected at every level. The top-level seed is
the master seed; nested seeds default to it unless set explicitly.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field

import yaml

from .grpo.objective import GrpoConfig
from .reward.encoder import EncoderConfig
from .reward.training import RewardTrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    threshold: float = 0.85
    splits: tuple[float, float, float] = (0.786, 0.107, 0.107)
    embedder_grid: int = 8


@dataclass
class RewardConfig:
    encoder: EncoderConfig = field(default_factory=lambda: EncoderConfig(frozen=True))
    train: RewardTrainConfig = field(default_factory=RewardTrainConfig)


@dataclass
class PolicySection:
    channels: tuple[int, ...] = (16, 32, 64)
    pretrain_epochs: int = 20
    pretrain_lr: float = 1e-3
    pretrain_batch: int = 4
    seed: int = 0


@dataclass
class MetricsConfig:
    peak: float = 255.0
    psnr_cap: float = 100.0


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8731
    manifest: str = "manifest.jsonl"
    store_dir: str = "annotation_store"


@dataclass
class RunConfig:
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    policy: PolicySection = field(default_factory=PolicySection)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _coerce(value, hint, path: str):
    origin = typing.get_origin(hint)
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping")
        return _from_dict(hint, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        args = typing.get_args(hint)
        elem = args[0]
        return tuple(elem(v) for v in value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if hint in (int, float, str):
        try:
            return hint(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return value


def _from_dict(cls, data: dict, path: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} under {path or 'top level'}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], f"{path}.{f.name}" if path else f.name)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path or cls.__name__}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    cfg = _from_dict(RunConfig, data, "")
    # propagate the master seed into sections that did not pin their own
    if "seed" not in data.get("reward", {}).get("train", {}):
        cfg.reward.train.seed = cfg.seed
    if "seed" not in data.get("grpo", {}):
        cfg.grpo.seed = cfg.seed
    if "seed" not in data.get("policy", {}):
        cfg.policy.seed = cfg.seed
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)
