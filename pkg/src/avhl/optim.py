"""Adam optimizer and finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, backward

ParamSet = dict[str, Tensor]


class Adam:
    """Standard bias-corrected Adam over a named parameter set."""

    def __init__(self, params: ParamSet, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.params.items():
            if p.grad is None:
                raise ValueError(f"parameter {name!r} has no gradient; run backward first")
            g = p.grad
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / (1.0 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1.0 - self.beta2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def grad_check(forward_fn: Callable[[], Tensor], params: ParamSet,
               eps: float = 1e-5, max_coords_per_param: int = 8,
               seed: int = 0) -> float:
    """Compare analytic gradients against central differences.

    ``forward_fn`` rebuilds the graph from the live parameter tensors and
    returns the scalar loss. Returns the max over sampled coordinates of
    |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
    """
    loss_a = forward_fn()
    loss_b = forward_fn()
    if loss_a.data[0, 0] != loss_b.data[0, 0]:
        raise ValueError("forward_fn is not deterministic; cannot gradient-check")
    backward(loss_a)
    analytic = {k: p.grad.copy() for k, p in params.items()}

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in sorted(params.items()):
        flat = p.data.reshape(-1)
        n = flat.size
        coords = (np.arange(n) if n <= max_coords_per_param
                  else rng.choice(n, size=max_coords_per_param, replace=False))
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + eps
            up = forward_fn().data[0, 0]
            flat[idx] = original - eps
            down = forward_fn().data[0, 0]
            flat[idx] = original
            g_fd = (up - down) / (2.0 * eps)
            g_a = analytic[name].reshape(-1)[idx]
            err = abs(g_a - g_fd) / max(1e-8, abs(g_a) + abs(g_fd))
            worst = max(worst, err)
    return worst
