from .encoder import EncoderConfig, PatchTransformer, TokenTransformer
from .model import NUM_SCORES, OVERALL_INDEX, RewardModel, RewardOutput, TriEncoding
from .training import RewardTrainConfig, cosine_lr, load_annotations, reward_loss, train_reward

__all__ = [
    "EncoderConfig",
    "NUM_SCORES",
    "OVERALL_INDEX",
    "PatchTransformer",
    "RewardModel",
    "RewardOutput",
    "RewardTrainConfig",
    "TokenTransformer",
    "TriEncoding",
    "cosine_lr",
    "load_annotations",
    "reward_loss",
    "train_reward",
]
