"""Simulated user feedback: maps a 0-100 sentence score to a reward in [0, 1]."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FEEDBACK_STYLES = ("scale", "granular", "variance", "skew")


@dataclass(frozen=True)
class FeedbackConfig:
    style: str = "granular"
    bins: int = 5
    sigma0: float = 0.1
    shrink: float = 1.0
    skew_factor: float = 0.25
    seed_offset: int = 0

    def __post_init__(self):
        if self.style not in FEEDBACK_STYLES:
            raise ValueError(f"unknown feedback style {self.style!r}; expected one of {FEEDBACK_STYLES}")
        if self.bins < 2:
            raise ValueError("bins must be at least 2")
        if self.sigma0 < 0 or self.shrink < 0:
            raise ValueError("sigma0 and shrink must be nonnegative")
        if not 0.0 < self.skew_factor <= 1.0:
            raise ValueError("skew_factor must lie in (0, 1]")


@dataclass
class FeedbackState:
    rng: np.random.Generator
    n: int = 0

    @classmethod
    def from_seed(cls, seed: int, offset: int = 0) -> "FeedbackState":
        # stream tag 1 keeps feedback noise apart from the policy's stream 0
        return cls(np.random.default_rng([int(seed), 1, int(offset)]))


def _check(bleu: float) -> float:
    bleu = float(bleu)
    if not 0.0 <= bleu <= 100.0 or math.isnan(bleu):
        raise ValueError(f"score {bleu} outside [0, 100]")
    return bleu


def scale(bleu: float) -> float:
    return _check(bleu) / 100.0


def granularize(bleu: float, bins: int = 5) -> tuple[int, float]:
    """Equal-width rating over [0, 100] with the top bin closed.

    Returns the 1-based rating and the reward ``rating / bins``.
    """
    bleu = _check(bleu)
    rating = min(int(math.floor(bleu * bins / 100.0)) + 1, bins)
    return rating, rating / bins


def perturb_variance(bleu: float, state: FeedbackState, sigma0: float = 0.1, shrink: float = 1.0) -> float:
    """Gaussian-perturbed scaled score, clipped to [0, 1].

    The standard deviation after ``n`` prior evaluations is
    ``sigma0 * shrink**n``; ``shrink=1`` keeps it constant.  Exactly one
    normal draw is consumed per call.
    """
    mean = scale(bleu)
    sigma = sigma0 * shrink ** state.n
    z = state.rng.standard_normal()
    state.n += 1
    return min(1.0, max(0.0, mean + sigma * z))


def skew(bleu: float, skew_factor: float = 0.25) -> float:
    return skew_factor * scale(bleu)


@dataclass
class FeedbackModel:
    """Stateful feedback source for one run."""

    config: FeedbackConfig = field(default_factory=FeedbackConfig)
    state: FeedbackState = field(default_factory=lambda: FeedbackState.from_seed(0))

    @classmethod
    def from_seed(cls, config: FeedbackConfig, seed: int) -> "FeedbackModel":
        return cls(config, FeedbackState.from_seed(seed, config.seed_offset))

    def __call__(self, bleu: float) -> float:
        cfg = self.config
        if cfg.style == "variance":
            return perturb_variance(bleu, self.state, cfg.sigma0, cfg.shrink)
        if cfg.style == "scale":
            reward = scale(bleu)
        elif cfg.style == "granular":
            reward = granularize(bleu, cfg.bins)[1]
        else:
            reward = skew(bleu, cfg.skew_factor)
        self.state.n += 1
        return reward
