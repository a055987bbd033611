"""Group-relative advantages: rewards centered and scaled within each group."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GroupAdvantage:
    scores: np.ndarray
    mean: float
    std: float
    advantages: np.ndarray


def group_advantage(scores, eps_adv: float = 1e-8) -> GroupAdvantage:
    """Normalize a group of region rewards to relative advantages.

    advantage_k = (s_k - mean) / (population std + eps_adv). The epsilon
    guard keeps degenerate all-equal groups at exactly zero advantage.
    """
    values = np.asarray(scores, dtype=np.float64).reshape(-1)
    if values.size < 1:
        raise ValueError("need at least one score")
    mean = float(values.mean())
    std = float(values.std())  # population (no Bessel correction)
    centered = values - mean
    # second centering pass removes the ~1e-16 rounding residue of the mean,
    # which the 1/(std + eps) guard would otherwise amplify past 1e-9 for
    # near-degenerate groups
    centered -= centered.mean()
    advantages = centered / (std + eps_adv)
    return GroupAdvantage(scores=values, mean=mean, std=std, advantages=advantages)
