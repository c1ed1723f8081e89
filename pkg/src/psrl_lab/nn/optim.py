"""SGD and Adam over a Network's parameter list."""

from __future__ import annotations

import numpy as np

from .engine import Network


class OptimizerState:
    """Per-network optimizer: update rule plus Adam moment buffers."""

    def __init__(self, net: Network, kind: str = "adam", lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {kind!r}")
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.kind = kind
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        if kind == "adam":
            self.m = [np.zeros_like(p.value) for p in net.params()]
            self.v = [np.zeros_like(p.value) for p in net.params()]
        else:
            self.m = []
            self.v = []


def optimizer_step(opt: OptimizerState, net: Network) -> None:
    """Apply one update from the accumulated gradients, then zero them."""
    params = net.params()
    if opt.kind == "sgd":
        for p in params:
            p.value -= opt.lr * p.grad
            p.grad[...] = 0.0
        opt.step_count += 1
        return
    opt.step_count += 1
    t = opt.step_count
    c1 = 1.0 - opt.beta1 ** t
    c2 = 1.0 - opt.beta2 ** t
    for p, m, v in zip(params, opt.m, opt.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * p.grad
        v *= opt.beta2
        v += (1.0 - opt.beta2) * p.grad * p.grad
        p.value -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)
        p.grad[...] = 0.0
