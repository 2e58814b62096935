"""Deep Q-network with replay buffer and periodically synced target network."""

from __future__ import annotations

import numpy as np

from ..nn import Adam, Mlp, clip_by_global_norm, huber_loss
from ..world import N_ACTIONS
from .base import LinearEpsilon, Policy, argmax_lowest, epsilon_greedy_select
from .replay import ReplayBuffer


class DqnAgent(Policy):
    name = "dqn"
    learns = True
    needs_observation = True

    def __init__(self, state_dim: int, n_actions: int = N_ACTIONS, hidden=(64, 64), *,
                 rng=None, init_rng: np.random.Generator | None = None,
                 replay_rng: np.random.Generator | None = None,
                 learning_rate: float = 1e-3, discount: float = 0.9,
                 buffer_capacity: int = 50_000, batch_size: int = 64,
                 target_sync_interval: int = 500, train_every: int = 1,
                 huber_delta: float = 1.0, grad_clip: float | None = 10.0,
                 epsilon: LinearEpsilon | None = None, online: Mlp | None = None):
        super().__init__()
        self.n_actions = n_actions
        self.online = online or Mlp([state_dim, *hidden, n_actions],
                                    init_rng if init_rng is not None else np.random.default_rng(0))
        self.target = self.online.copy()
        self.optimizer = Adam([self.online.flat], lr=learning_rate)
        self.buffer = ReplayBuffer(buffer_capacity, state_dim)
        self.rng = rng
        self.replay_rng = replay_rng if replay_rng is not None else np.random.default_rng(0)
        self.discount = discount
        self.batch_size = batch_size
        self.target_sync_interval = target_sync_interval
        self.train_every = train_every
        self.huber_delta = huber_delta
        self.grad_clip = grad_clip
        self.epsilon = epsilon or LinearEpsilon(1.0, 0.05, 1)
        self.steps = 0  # decisions taken in training mode
        self.pushes = 0
        self.train_steps = 0

    def q_values(self, state) -> np.ndarray:
        return self.online.forward(state)

    def decide(self, obs) -> int:
        q = self.online.forward(obs.vector)
        if not self.training:
            return argmax_lowest(q, obs.legal)
        eps = self.epsilon(self.steps)
        self.steps += 1
        return epsilon_greedy_select(q, eps, self.rng, obs.legal)

    def learn(self, t) -> None:
        if not self.training:
            return
        self.buffer.push(t.state, t.action, t.reward, t.next_state, t.done)
        self.pushes += 1
        if self.pushes % self.train_every == 0:
            dqn_train_step(self)

    def save(self, path) -> None:
        self.online.save(path)

    @classmethod
    def load(cls, path) -> "DqnAgent":
        net = Mlp.load(path)
        return cls(net.layer_sizes[0], net.layer_sizes[-1], net.layer_sizes[1:-1], online=net)


def dqn_train_step(agent: DqnAgent, rng: np.random.Generator | None = None) -> float:
    """One minibatch update; a no-op returning 0.0 while the buffer is warming up."""
    if len(agent.buffer) < agent.batch_size:
        return 0.0
    s, a, r, s2, done = agent.buffer.sample(agent.batch_size, rng if rng is not None else agent.replay_rng)
    q_next = agent.target.forward(s2).max(axis=1)
    y = r + agent.discount * (1.0 - done) * q_next
    out, acts = agent.online.forward_cache(s)
    rows = np.arange(len(a))
    loss, dpred = huber_loss(out[rows, a], y, agent.huber_delta)
    grad_out = np.zeros_like(out)
    grad_out[rows, a] = dpred / len(a)
    grads = agent.online.backward(acts, grad_out)
    flat = agent.online.flatten(grads)
    clip_by_global_norm([flat], agent.grad_clip)
    agent.optimizer.step([agent.online.flat], [flat])
    agent.train_steps += 1
    if agent.train_steps % agent.target_sync_interval == 0:
        agent.target.load_from(agent.online)
    if agent.train_steps % 1000 == 0:
        agent.online.assert_finite()
    return float(np.mean(loss))
