"""Dense float64 layers with hand-derived backward passes, Adam, and weight clipping.

Forward methods return (output, cache) so the same layer can be applied to
several batches inside one training step; backward(cache, grad_out) returns
the input gradient and accumulates parameter gradients in place.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np


class ShapeError(ValueError):
    """Tensor shapes disagree with the layer or loss contract."""


class NonFiniteError(ArithmeticError):
    """A gradient or loss value is NaN or infinite."""


class Tensor:
    """Parameter array (row-major float64) with an optional gradient accumulator."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def add_grad(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None


class Linear:
    """y = x @ W.T + b with W of shape (out, in)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(in_dim)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.W = Tensor(rng.uniform(-bound, bound, size=(out_dim, in_dim)))
        self.b = Tensor(np.zeros(out_dim))

    def forward(self, x: np.ndarray, train: bool):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"expected (batch, {self.in_dim}) input, got {x.shape}")
        return x @ self.W.data.T + self.b.data, x

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        x = cache
        self.W.add_grad(grad_out.T @ x)
        self.b.add_grad(grad_out.sum(axis=0))
        return grad_out @ self.W.data

    def parameters(self) -> list[Tensor]:
        return [self.W, self.b]

    def state(self) -> dict[str, np.ndarray]:
        return {"W": self.W.data, "b": self.b.data}


class LeakyReLU:
    """Elementwise max(x, slope * x); the derivative at exactly 0 is taken as 1."""

    def __init__(self, slope: float = 0.1):
        if slope < 0:
            raise ValueError("slope must be nonnegative")
        self.slope = slope

    def forward(self, x: np.ndarray, train: bool):
        return np.where(x >= 0, x, self.slope * x), x

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        x = cache
        return grad_out * np.where(x >= 0, 1.0, self.slope)

    def parameters(self) -> list[Tensor]:
        return []

    def state(self) -> dict[str, np.ndarray]:
        return {}


class BatchNorm:
    """Per-feature batch normalization with affine parameters and running statistics.

    Train mode normalizes by the biased batch statistics and updates the
    running statistics with the given momentum; eval mode is a fixed affine
    map through the running statistics.
    """

    def __init__(self, num_features: int, momentum: float = 0.1, eps: float = 1e-5):
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(num_features))
        self.beta = Tensor(np.zeros(num_features))
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)

    def forward(self, x: np.ndarray, train: bool):
        if x.ndim != 2 or x.shape[1] != self.num_features:
            raise ShapeError(f"expected (batch, {self.num_features}) input, got {x.shape}")
        if train:
            if x.shape[0] < 2:
                raise ShapeError("batch norm needs batch size >= 2 in train mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            x_hat = (x - mean) * inv_std
            cache = (x_hat, inv_std)
        else:
            x_hat = (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
            cache = None
        return self.gamma.data * x_hat + self.beta.data, cache

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        if cache is None:
            raise ValueError("backward requires a train-mode cache")
        x_hat, inv_std = cache
        batch = grad_out.shape[0]
        self.gamma.add_grad((grad_out * x_hat).sum(axis=0))
        self.beta.add_grad(grad_out.sum(axis=0))
        g_hat = grad_out * self.gamma.data
        return (inv_std / batch) * (
            batch * g_hat - g_hat.sum(axis=0) - x_hat * (g_hat * x_hat).sum(axis=0)
        )

    def parameters(self) -> list[Tensor]:
        return [self.gamma, self.beta]

    def state(self) -> dict[str, np.ndarray]:
        return {
            "gamma": self.gamma.data,
            "beta": self.beta.data,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }


class Softmax:
    """Row-wise softmax, stabilized by max subtraction."""

    def forward(self, x: np.ndarray, train: bool):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)
        return y, y

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        y = cache
        return y * (grad_out - (grad_out * y).sum(axis=1, keepdims=True))

    def parameters(self) -> list[Tensor]:
        return []

    def state(self) -> dict[str, np.ndarray]:
        return {}


def l1_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over the batch of the per-sample L1 distance."""
    if a.shape != b.shape:
        raise ShapeError(f"l1_loss shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum(axis=1).mean())

def l1_loss_backward(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Subgradient of l1_loss with respect to a; sign(0) = 0 at ties."""
    if a.shape != b.shape:
        raise ShapeError(f"l1_loss shapes differ: {a.shape} vs {b.shape}")
    return np.sign(a - b) / a.shape[0]


_PROB_FLOOR = 1e-12


def cross_entropy(pred: np.ndarray, targets: np.ndarray) -> float:
    """Mean of -log pred[target], with probabilities floored at 1e-12."""
    if np.any(targets < 0) or np.any(targets >= pred.shape[1]):
        raise ValueError("class id out of range")
    p = np.maximum(pred[np.arange(pred.shape[0]), targets], _PROB_FLOOR)
    return float(-np.log(p).mean())

def cross_entropy_backward(pred: np.ndarray, targets: np.ndarray) -> np.ndarray:
    if np.any(targets < 0) or np.any(targets >= pred.shape[1]):
        raise ValueError("class id out of range")
    rows = np.arange(pred.shape[0])
    grad = np.zeros_like(pred)
    p = pred[rows, targets]
    above = p > _PROB_FLOOR
    grad[rows[above], targets[above]] = -1.0 / (pred.shape[0] * p[above])
    return grad


class Adam:
    """Adam with bias correction.

    Moments and step counts are kept per parameter, so one optimizer can
    cover several networks whose parameters are updated in different phases
    without the phases distorting each other's bias correction.
    """

    def __init__(self, lr: float, beta1: float, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._slots: dict[int, tuple[np.ndarray, np.ndarray, int]] = {}

    def step(self, params: Iterable[Tensor]) -> None:
        for p in params:
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("non-finite gradient passed to Adam")
            m, v, t = self._slots.get(id(p), (np.zeros_like(p.data), np.zeros_like(p.data), 0))
            t += 1
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            self._slots[id(p)] = (m, v, t)


def clip_weights(params: Iterable[Tensor], c: float) -> None:
    """Clamp every parameter entry to [-c, c]."""
    if c <= 0:
        raise ValueError("clip bound must be positive")
    for p in params:
        np.clip(p.data, -c, c, out=p.data)
