"""Arm-selection policies sharing a ``choose`` / ``update`` contract.

Non-contextual policies ignore ``context``; LinUCB requires it.  Only the
oracle baselines look at the record's raw scores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

POLICY_KINDS = ("random", "epsilon_greedy", "ucb1", "linucb", "oracle", "best_arm_oracle")


def _as_vector(context) -> Optional[np.ndarray]:
    if context is None:
        return None
    values = getattr(context, "values", context)
    return np.asarray(values, dtype=float)


class Policy:
    contextual = False

    def __init__(self, num_arms: int, rng: Optional[np.random.Generator] = None):
        if num_arms < 1:
            raise ValueError("a policy needs at least one arm")
        self.num_arms = num_arms
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def choose(self, context=None, scores=None) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float, context=None) -> None:
        self._check_update(arm, reward)

    def _check_update(self, arm: int, reward: float) -> None:
        if not 0 <= arm < self.num_arms:
            raise ValueError(f"arm {arm} out of range for {self.num_arms} arms")
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"reward {reward} outside [0, 1]")

    def _break_tie(self, values: np.ndarray) -> int:
        best = np.flatnonzero(values == values.max())
        if len(best) == 1:
            return int(best[0])
        return int(self.rng.choice(best))


class MeanTracker:
    """Pull counts and running mean reward per arm."""

    def __init__(self, num_arms: int):
        self.counts = np.zeros(num_arms, dtype=np.int64)
        self.means = np.zeros(num_arms)

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm] += 1
        self.means[arm] += (reward - self.means[arm]) / self.counts[arm]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class RandomPolicy(Policy):
    def choose(self, context=None, scores=None) -> int:
        return int(self.rng.integers(self.num_arms))


class EpsilonGreedy(Policy):
    def __init__(self, num_arms: int, epsilon: float = 0.3, rng=None):
        super().__init__(num_arms, rng)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = epsilon
        self.tracker = MeanTracker(num_arms)

    def choose(self, context=None, scores=None) -> int:
        unpulled = np.flatnonzero(self.tracker.counts == 0)
        if len(unpulled):
            return int(self.rng.choice(unpulled))
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.num_arms))
        return self._break_tie(self.tracker.means)

    def update(self, arm: int, reward: float, context=None) -> None:
        self._check_update(arm, reward)
        self.tracker.update(arm, reward)


class Ucb1(Policy):
    """UCB1 with a play-each-arm-once start; fully deterministic."""

    def __init__(self, num_arms: int, rng=None):
        super().__init__(num_arms, rng)
        self.tracker = MeanTracker(num_arms)
        self.t = 0

    def indices(self) -> np.ndarray:
        """Upper-confidence index of every arm for the upcoming round ``t + 1``."""
        counts = self.tracker.counts
        out = np.full(self.num_arms, np.inf)
        pulled = counts > 0
        rnd = self.t + 1
        out[pulled] = self.tracker.means[pulled] + np.sqrt(2.0 * math.log(rnd) / counts[pulled])
        return out

    def choose(self, context=None, scores=None) -> int:
        unpulled = np.flatnonzero(self.tracker.counts == 0)
        arm = int(unpulled[0]) if len(unpulled) else int(np.argmax(self.indices()))
        self.t += 1
        return arm

    def update(self, arm: int, reward: float, context=None) -> None:
        self._check_update(arm, reward)
        self.tracker.update(arm, reward)


class LinUcb(Policy):
    """Disjoint LinUCB: one ridge regression from context to reward per arm.

    ``A_inv`` is kept current with Sherman-Morrison rank-one updates and
    recomputed from ``A`` every ``resolve_every`` updates of an arm.
    """

    contextual = True

    def __init__(self, num_arms: int, dim: int, alpha: float = 1.0, lam: float = 1.0,
                 rng=None, resolve_every: int = 1000):
        super().__init__(num_arms, rng)
        if dim < 1:
            raise ValueError("context dimension must be positive")
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.dim = dim
        self.alpha = alpha
        self.lam = lam
        self.resolve_every = resolve_every
        self.A = np.tile(lam * np.eye(dim), (num_arms, 1, 1))
        self.A_inv = np.tile(np.eye(dim) / lam, (num_arms, 1, 1))
        self.b = np.zeros((num_arms, dim))
        self.counts = np.zeros(num_arms, dtype=np.int64)

    def _context(self, context) -> np.ndarray:
        x = _as_vector(context)
        if x is None:
            raise ValueError("LinUCB needs a context vector")
        if x.shape != (self.dim,):
            raise ValueError(f"context has shape {x.shape}, expected ({self.dim},)")
        return x

    @property
    def theta(self) -> np.ndarray:
        return np.einsum("kij,kj->ki", self.A_inv, self.b)

    def ucb_scores(self, context) -> np.ndarray:
        x = self._context(context)
        ax = self.A_inv @ x
        width = np.sqrt(np.maximum(ax @ x, 0.0))
        return self.theta @ x + self.alpha * width

    def choose(self, context=None, scores=None) -> int:
        return self._break_tie(self.ucb_scores(context))

    def update(self, arm: int, reward: float, context=None) -> None:
        self._check_update(arm, reward)
        x = self._context(context)
        self.A[arm] += np.outer(x, x)
        self.b[arm] += reward * x
        self.counts[arm] += 1
        if self.counts[arm] % self.resolve_every == 0:
            self.A_inv[arm] = np.linalg.inv(self.A[arm])
        else:
            u = self.A_inv[arm] @ x
            self.A_inv[arm] -= np.outer(u, u) / (1.0 + x @ u)
        self.A_inv[arm] = 0.5 * (self.A_inv[arm] + self.A_inv[arm].T)


class Oracle(Policy):
    """Picks the highest raw score of the current record (lowest index on ties)."""

    def choose(self, context=None, scores=None) -> int:
        if scores is None:
            raise ValueError("the oracle policy needs the record's scores")
        return int(np.argmax(scores))


class BestArmOracle(Policy):
    def __init__(self, num_arms: int, arm: int, rng=None):
        super().__init__(num_arms, rng)
        if not 0 <= arm < num_arms:
            raise ValueError(f"best arm {arm} out of range")
        self.arm = arm

    def choose(self, context=None, scores=None) -> int:
        return self.arm


def precompute_best_arm(dataset) -> int:
    """Arm with the highest mean score over the whole dataset, lowest index on ties."""
    scores = getattr(dataset, "score_matrix", dataset)
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ValueError("precompute_best_arm needs a nonempty dataset")
    return int(np.argmax(scores.mean(axis=0)))


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "epsilon_greedy"
    epsilon: float = 0.3
    alpha: float = 1.0
    lam: float = 1.0
    seed: int = 0
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def contextual(self) -> bool:
        return self.kind == "linucb"


def policy_rng(run_seed: int, config: PolicyConfig) -> np.random.Generator:
    return np.random.default_rng([int(run_seed), 0, int(config.seed)])


def make_policy(config: PolicyConfig, num_arms: int, rng: np.random.Generator,
                dim: Optional[int] = None, best_arm: Optional[int] = None) -> Policy:
    kind = config.kind
    if kind == "random":
        return RandomPolicy(num_arms, rng)
    if kind == "epsilon_greedy":
        return EpsilonGreedy(num_arms, config.epsilon, rng)
    if kind == "ucb1":
        return Ucb1(num_arms, rng)
    if kind == "linucb":
        if dim is None:
            raise ValueError("linucb needs a feature configuration")
        return LinUcb(num_arms, dim, config.alpha, config.lam, rng)
    if kind == "oracle":
        return Oracle(num_arms, rng)
    if best_arm is None:
        raise ValueError("best_arm_oracle needs a precomputed best arm")
    return BestArmOracle(num_arms, best_arm, rng)
