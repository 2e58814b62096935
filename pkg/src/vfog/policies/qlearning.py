"""Tabular Q-learning over discretized state keys."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..world import N_ACTIONS
from .base import LinearEpsilon, Policy, argmax_lowest, epsilon_greedy_select


class QTable:
    """Sparse table; unseen keys read as all-zero rows."""

    def __init__(self, n_actions: int = N_ACTIONS, learning_rate: float = 0.1,
                 discount: float = 0.9, visit_decay: float = 1000.0):
        if not 0 < learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0 < discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        self.n_actions = n_actions
        self.learning_rate = learning_rate
        self.discount = discount
        self.visit_decay = visit_decay
        self.q: dict[tuple, np.ndarray] = {}
        self.visits: dict[tuple, int] = {}
        self._zeros = np.zeros(n_actions)

    def values(self, key) -> np.ndarray:
        return self.q.get(key, self._zeros)

    def row(self, key) -> np.ndarray:
        r = self.q.get(key)
        if r is None:
            r = self.q[key] = np.zeros(self.n_actions)
        return r

    def step_size(self, key) -> float:
        if not math.isfinite(self.visit_decay):
            return self.learning_rate
        return self.learning_rate / (1.0 + self.visits.get(key, 0) / self.visit_decay)

    def __len__(self) -> int:
        return len(self.q)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        keys = sorted(self.q)
        width = len(keys[0]) if keys else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"k{i}" for i in range(width)] + [f"q{a}" for a in range(self.n_actions)])
            for k in keys:
                w.writerow(list(k) + [repr(float(v)) for v in self.q[k]])

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "QTable":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"empty Q-table file '{path}'")
        header = rows[0]
        n_keys = sum(1 for h in header if h.startswith("k"))
        n_actions = len(header) - n_keys
        if n_actions < 1 or header[n_keys:] != [f"q{a}" for a in range(n_actions)]:
            raise ValueError(f"bad Q-table header in '{path}': {header}")
        table = cls(n_actions=n_actions, **kwargs)
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise ValueError(f"'{path}' line {lineno}: expected {len(header)} fields, got {len(row)}")
            key = tuple(int(x) for x in row[:n_keys])
            table.q[key] = np.array([float(x) for x in row[n_keys:]])
        return table


def q_update(table: QTable, t) -> float:
    """One temporal-difference update; returns the TD error."""
    row = table.row(t.key)
    bootstrap = 0.0 if t.done else table.discount * float(np.max(table.values(t.next_key)))
    td = t.reward + bootstrap - row[t.action]
    row[t.action] += table.step_size(t.key) * td
    table.visits[t.key] = table.visits.get(t.key, 0) + 1
    if not math.isfinite(row[t.action]):
        raise FloatingPointError("Q-value became non-finite")
    return float(td)


class QLearningPolicy(Policy):
    name = "q-learning"
    learns = True
    needs_observation = True

    def __init__(self, table: QTable | None = None, rng=None, epsilon: LinearEpsilon | None = None):
        super().__init__()
        self.table = table or QTable()
        self.rng = rng
        self.epsilon = epsilon or LinearEpsilon(1.0, 0.05, 1)
        self.steps = 0

    def decide(self, obs) -> int:
        values = self.table.values(obs.key)
        if not self.training:
            return argmax_lowest(values, obs.legal)
        eps = self.epsilon(self.steps)
        self.steps += 1
        return epsilon_greedy_select(values, eps, self.rng, obs.legal)

    def learn(self, transition) -> None:
        if self.training:
            q_update(self.table, transition)

    def save(self, path) -> None:
        self.table.save(path)

    @classmethod
    def load(cls, path) -> "QLearningPolicy":
        return cls(QTable.load(path))
