"""One-step advantage actor-critic with a shared trunk (policy logits + state value)."""

from __future__ import annotations

import numpy as np

from ..nn import Adam, Mlp, clip_by_global_norm, softmax
from ..world import N_ACTIONS
from .base import Policy, argmax_lowest

POLICY_HEAD_SCALE = 0.01


def masked_policy(logits: np.ndarray, legal) -> np.ndarray:
    if len(legal) == len(logits):
        return softmax(logits)
    z = np.full_like(logits, -np.inf)
    idx = list(legal)
    z[idx] = logits[idx]
    return softmax(z)


class ActorCriticAgent(Policy):
    name = "actor-critic"
    learns = True
    needs_observation = True

    def __init__(self, state_dim: int, n_actions: int = N_ACTIONS, hidden=(64, 64), *,
                 rng=None, init_rng: np.random.Generator | None = None,
                 learning_rate: float = 1e-3, discount: float = 0.9,
                 entropy_coef: float = 0.01, value_coef: float = 0.5,
                 grad_clip: float | None = 10.0, net: Mlp | None = None):
        super().__init__()
        self.n_actions = n_actions
        # last output unit is the state value, the rest are policy logits
        if net is None:
            net = Mlp([state_dim, *hidden, n_actions + 1],
                      init_rng if init_rng is not None else np.random.default_rng(0))
            # small logit weights start the policy near uniform, so one unlucky
            # draw cannot lock it onto a single action before it has explored
            net.weights[-1][:, :n_actions] *= POLICY_HEAD_SCALE
        self.net = net
        self.optimizer = Adam([self.net.flat], lr=learning_rate)
        self.rng = rng
        self.discount = discount
        self.entropy_coef = entropy_coef
        self.value_coef = value_coef
        self.grad_clip = grad_clip
        self.updates = 0

    def policy(self, state, legal=None) -> np.ndarray:
        out = self.net.forward(state)
        legal = range(self.n_actions) if legal is None else legal
        return masked_policy(out[:self.n_actions], tuple(legal))

    def value(self, state) -> float:
        return float(self.net.forward(state)[self.n_actions])

    def decide(self, obs) -> int:
        pi = self.policy(obs.vector, obs.legal)
        if not self.training:
            return argmax_lowest(pi, obs.legal)
        u = self.rng.uniform()
        c = 0.0
        for a in obs.legal:
            c += pi[a]
            if u < c:
                return int(a)
        return int(obs.legal[-1])

    def learn(self, t) -> None:
        if self.training:
            ac_train_step(self, t)

    def save(self, path) -> None:
        self.net.save(path)

    @classmethod
    def load(cls, path) -> "ActorCriticAgent":
        net = Mlp.load(path)
        return cls(net.layer_sizes[0], net.layer_sizes[-1] - 1, net.layer_sizes[1:-1], net=net)


def ac_train_step(agent: ActorCriticAgent, t) -> tuple[float, float]:
    """Joint actor/critic update from one transition; returns (actor_loss, critic_loss)."""
    n = agent.n_actions
    out, acts = agent.net.forward_cache(t.state)
    v = out[n]
    v_next = 0.0 if t.done else float(agent.net.forward(t.next_state)[n])
    advantage = t.reward + agent.discount * v_next - v

    pi = softmax(out[:n])
    logp = np.log(np.maximum(pi, 1e-300))
    entropy = -float(np.sum(pi * logp))
    actor_loss = -logp[t.action] * advantage - agent.entropy_coef * entropy
    critic_loss = advantage * advantage

    grad = np.zeros(n + 1)
    # d(-log pi_a)/dz = pi - onehot(a); advantage held constant
    grad[:n] = pi * advantage
    grad[t.action] -= advantage
    # d(-c*H)/dz_i = c * pi_i * (log pi_i + H)
    grad[:n] += agent.entropy_coef * pi * (logp + entropy)
    # semi-gradient of A^2 through V(s) only
    grad[n] = -2.0 * advantage * agent.value_coef
    grads = agent.net.backward(acts, grad)
    flat = agent.net.flatten(grads)
    clip_by_global_norm([flat], agent.grad_clip)
    agent.optimizer.step([agent.net.flat], [flat])
    agent.updates += 1
    if agent.updates % 1000 == 0:
        agent.net.assert_finite()
    return float(actor_loss), float(critic_loss)
