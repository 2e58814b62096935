"""Tiny bandit and MDP drivers shared by the policy tests and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vfog.env import Transition
from vfog.policies import ActorCriticAgent, DqnAgent, LinearEpsilon
from vfog.simcore import RngStream

STATE = np.array([1.0])
REWARDS = (1.0, 0.0)


@dataclass
class Obs:
    vector: np.ndarray
    key: tuple
    legal: tuple


OBS = Obs(STATE, (0,), (0, 1))


def bandit_transition(action: int) -> Transition:
    return Transition(STATE, (0,), action, REWARDS[action], STATE, (0,), True)


def train_dqn_bandit(seed: int, steps: int = 2000) -> DqnAgent:
    agent = DqnAgent(1, 2, (16,), rng=RngStream(seed, "exploration"),
                     init_rng=RngStream(seed, "nn-init").generator,
                     replay_rng=RngStream(seed, "replay").generator,
                     batch_size=32, target_sync_interval=100,
                     epsilon=LinearEpsilon(1.0, 0.1, steps // 2)).train()
    for _ in range(steps):
        agent.learn(bandit_transition(agent.decide(OBS)))
    return agent.eval()


def train_ac_bandit(seed: int, steps: int = 3000) -> ActorCriticAgent:
    agent = ActorCriticAgent(1, 2, (16,), rng=RngStream(seed, "exploration"),
                             init_rng=RngStream(seed, "nn-init").generator).train()
    for _ in range(steps):
        agent.learn(bandit_transition(agent.decide(OBS)))
    return agent.eval()


# 3-state, 2-action deterministic MDP used as the tabular oracle
MDP_NEXT = [[1, 2], [2, 0], [0, 1]]
MDP_REWARD = [[0.0, 1.0], [2.0, -1.0], [0.5, 0.0]]


def mdp_transition(s: int, a: int) -> Transition:
    s2 = MDP_NEXT[s][a]
    return Transition(None, (s,), a, MDP_REWARD[s][a], None, (s2,), False)
