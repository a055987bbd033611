"""Human-feedback pipeline for infrared-visible image fusion.

Dataset deduplication and quality selection, circle-annotation labels, a
dual-head (scores + artifact heatmap) reward model, region-level GRPO
fine-tuning of a compact fusion policy, reference fusion metrics, and an
annotation HTTP service.
"""

__version__ = "0.1.0"
