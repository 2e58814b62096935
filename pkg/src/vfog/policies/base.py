"""Common policy surface: ``decide(observation) -> action`` and ``learn(transition)``."""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np


class Mode(enum.Enum):
    TRAINING = "training"
    EVALUATION = "evaluation"


def argmax_lowest(values: Sequence[float], legal: Sequence[int] | None = None) -> int:
    """Index of the maximum value, ties broken toward the lowest index."""
    best, best_v = -1, -np.inf
    idx = range(len(values)) if legal is None else sorted(legal)
    for a in idx:
        if values[a] > best_v:
            best, best_v = a, values[a]
    return int(best)


def argmin_lowest(values: Sequence[float], legal: Sequence[int] | None = None) -> int:
    best, best_v = -1, np.inf
    idx = range(len(values)) if legal is None else sorted(legal)
    for a in idx:
        if values[a] < best_v:
            best, best_v = a, values[a]
    return int(best)


def epsilon_greedy_select(values, epsilon: float, rng, legal: Sequence[int] | None = None) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    legal = tuple(range(len(values))) if legal is None else tuple(legal)
    if epsilon > 0.0 and rng.uniform() < epsilon:
        return int(legal[rng.integers(0, len(legal))])
    return argmax_lowest(values, legal)


class LinearEpsilon:
    """Linear decay from ``start`` to ``end`` over ``decay_steps`` decisions."""

    def __init__(self, start: float, end: float, decay_steps: int):
        self.start, self.end, self.decay_steps = start, end, max(1, int(decay_steps))

    def __call__(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


class Policy:
    name = "policy"
    learns = False
    batched = False
    needs_observation = False

    def __init__(self) -> None:
        self.mode = Mode.EVALUATION

    @property
    def training(self) -> bool:
        return self.mode is Mode.TRAINING

    def train(self) -> "Policy":
        self.mode = Mode.TRAINING
        return self

    def eval(self) -> "Policy":
        self.mode = Mode.EVALUATION
        return self

    def decide(self, obs) -> int:
        raise NotImplementedError

    def learn(self, transition) -> None:
        return None
