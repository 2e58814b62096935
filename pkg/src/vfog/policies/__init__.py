"""Offloading policies sharing the ``decide``/``learn`` surface."""

from .actor_critic import ActorCriticAgent, ac_train_step
from .base import LinearEpsilon, Mode, Policy, argmax_lowest, epsilon_greedy_select
from .dqn import DqnAgent, dqn_train_step
from .greedy import GreedyPolicy, greedy_decide
from .hungarian import hungarian
from .optimization import OptimizationPolicy, opt_assign_batch
from .qlearning import QLearningPolicy, QTable, q_update
from .replay import ReplayBuffer

__all__ = [
    "ActorCriticAgent", "DqnAgent", "GreedyPolicy", "LinearEpsilon", "Mode", "OptimizationPolicy",
    "Policy", "QLearningPolicy", "QTable", "ReplayBuffer", "ac_train_step", "argmax_lowest",
    "dqn_train_step", "epsilon_greedy_select", "greedy_decide", "hungarian", "opt_assign_batch",
    "q_update",
]
