from .advantage import GroupAdvantage, group_advantage
from .objective import GrpoConfig, grpo_objective, region_ratio, region_reward, region_weights
from .segmentation import RegionSet, SEGMENTERS, grid_segment, intensity_segment, segment_regions
from .training import finetune_grpo, save_history_csv

__all__ = [
    "GroupAdvantage",
    "GrpoConfig",
    "RegionSet",
    "SEGMENTERS",
    "finetune_grpo",
    "grid_segment",
    "group_advantage",
    "grpo_objective",
    "intensity_segment",
    "region_ratio",
    "region_reward",
    "region_weights",
    "save_history_csv",
    "segment_regions",
]
