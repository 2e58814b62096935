"""Small NumPy MLP: ReLU hidden layers, linear output, manual backprop and Adam.

Weight file layout (little-endian)::

    8 bytes   magic  b"VFOGMLP1"
    uint32    number of layer sizes L
    L x uint32 layer sizes
    float64s  for each layer: W (in x out, row-major) then b (out)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"VFOGMLP1"


class NonFiniteError(FloatingPointError):
    pass


class WeightFormatError(ValueError):
    pass


class Mlp:
    def __init__(self, layer_sizes, rng: np.random.Generator | None = None):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {layer_sizes!r}")
        self.layer_sizes = sizes
        parts = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                limit = np.sqrt(6.0 / fan_in)  # He-uniform
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            parts += [w.reshape(-1), np.zeros(fan_out)]
        self._bind(np.concatenate(parts))

    def _bind(self, flat: np.ndarray) -> None:
        """Weights and biases are views into one flat buffer so optimizers touch it in one pass."""
        self.flat = flat
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        at = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(flat[at:at + fan_in * fan_out].reshape(fan_in, fan_out))
            at += fan_in * fan_out
            self.biases.append(flat[at:at + fan_out])
            at += fan_out

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        other = Mlp.__new__(Mlp)
        other.layer_sizes = list(self.layer_sizes)
        other._bind(self.flat.copy())
        return other

    def load_from(self, other: "Mlp") -> None:
        if other.layer_sizes != self.layer_sizes:
            raise ValueError("layer sizes differ")
        self.flat[...] = other.flat

    @staticmethod
    def flatten(grads: list[np.ndarray]) -> np.ndarray:
        """Gradients in :attr:`params` order laid out like :attr:`flat`."""
        return np.concatenate([g.reshape(-1) for g in grads])

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layer_sizes[0]:
            raise ValueError(f"input dimension {x.shape[-1]} != {self.layer_sizes[0]}")
        return x

    def forward(self, x) -> np.ndarray:
        h = self._check_input(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cache(self, x):
        """Forward pass keeping every layer input for :meth:`backward`."""
        h = self._check_input(x)
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def backward(self, acts, grad_out) -> list[np.ndarray]:
        """Gradients in :attr:`params` order; batch inputs sum over the batch."""
        g = np.asarray(grad_out, dtype=float)
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            if g.ndim == 1:
                grads[2 * i] = np.outer(a_in, g)
                grads[2 * i + 1] = g.copy()
            else:
                grads[2 * i] = a_in.T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * (acts[i] > 0.0)
        return grads

    def assert_finite(self) -> None:
        for p in self.params:
            if not np.all(np.isfinite(p)):
                raise NonFiniteError("network parameter became non-finite")

    # -- persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        head = MAGIC + struct.pack("<I", len(self.layer_sizes)) + struct.pack(
            f"<{len(self.layer_sizes)}I", *self.layer_sizes)
        body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in self.params)
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Mlp":
        if data[:8] != MAGIC:
            raise WeightFormatError("not an MLP weight file (bad magic)")
        try:
            (n,) = struct.unpack_from("<I", data, 8)
            sizes = list(struct.unpack_from(f"<{n}I", data, 12))
        except struct.error as exc:
            raise WeightFormatError(f"truncated header: {exc}") from exc
        net = cls(sizes)
        offset = 12 + 4 * n
        expected = offset + 8 * sum(p.size for p in net.params)
        if len(data) != expected:
            raise WeightFormatError(f"expected {expected} bytes for layers {sizes}, got {len(data)}")
        for p in net.params:
            k = p.size
            p[...] = np.frombuffer(data, dtype="<f8", count=k, offset=offset).reshape(p.shape)
            offset += 8 * k
        return net

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Mlp":
        return cls.from_bytes(Path(path).read_bytes())


def forward(net: Mlp, x) -> np.ndarray:
    return net.forward(x)


def backward(net: Mlp, x, loss_grad) -> list[np.ndarray]:
    _, acts = net.forward_cache(x)
    return net.backward(acts, loss_grad)


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float | None) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(grads) != len(params):
            raise ValueError("gradient count does not match parameters")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def adam_step(net: Mlp, grads: list[np.ndarray], state: Adam) -> None:
    state.step(net.params, grads)


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def huber_loss(pred, target, delta: float = 1.0):
    """Elementwise Huber loss and its derivative with respect to ``pred``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    err = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    a = np.abs(err)
    quad = a <= delta
    loss = np.where(quad, 0.5 * err * err, delta * (a - 0.5 * delta))
    grad = np.where(quad, err, delta * np.sign(err))
    if np.ndim(loss) == 0:
        return float(loss), float(grad)
    return loss, grad
