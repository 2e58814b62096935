"""Myopic baseline: pick the target with the lowest predicted completion latency."""

from __future__ import annotations

from .base import Policy, argmin_lowest


def greedy_decide(task, world, now: float, legal=None) -> int:
    legal = world.legal_actions(task) if legal is None else legal
    preds = [float("inf")] * 4
    for a in legal:
        preds[a] = world.predicted_completion_latency(task, a, now)
    return argmin_lowest(preds, legal)


class GreedyPolicy(Policy):
    name = "greedy"

    def decide(self, obs) -> int:
        return greedy_decide(obs.task, obs.world, obs.now, obs.legal)
