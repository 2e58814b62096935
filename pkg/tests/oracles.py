"""Independent reference computations used as test oracles.

Nothing here imports the package under test; each oracle is a direct,
slow, obviously-correct restatement of the quantity being checked.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_assignment(cost) -> float:
    """Minimum total over all injective row->column maps (rows <= cols)."""
    c = np.asarray(cost, dtype=float)
    n, m = c.shape
    best = math.inf
    for cols in itertools.permutations(range(m), n):
        best = min(best, sum(c[i, j] for i, j in enumerate(cols)))
    return best


def value_iteration(P, R, gamma: float, tol: float = 1e-12):
    """Q* for a finite MDP. P[s][a] -> next state (deterministic), R[s][a] -> reward."""
    n_s, n_a = len(P), len(P[0])
    q = np.zeros((n_s, n_a))
    while True:
        v = q.max(axis=1)
        new = np.array([[R[s][a] + gamma * v[P[s][a]] for a in range(n_a)] for s in range(n_s)])
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new


def jain(xs) -> float:
    xs = [float(x) for x in xs]
    if all(x == 0 for x in xs):
        return 1.0
    return sum(xs) ** 2 / (len(xs) * sum(x * x for x in xs))


def mlp_forward(weights, biases, x):
    """Plain ReLU MLP forward pass written independently of the package."""
    h = np.asarray(x, dtype=float)
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if i < len(weights) - 1:
            h = np.where(h > 0, h, 0.0)
    return h


def central_difference(f, params, index, h: float = 1e-5) -> float:
    """d f / d params[p][idx] by central differences; ``index`` = (p, flat_idx)."""
    p, k = index
    flat = params[p].reshape(-1)
    orig = flat[k]
    flat[k] = orig + h
    up = f()
    flat[k] = orig - h
    down = f()
    flat[k] = orig
    return (up - down) / (2 * h)
