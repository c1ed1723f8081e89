"""Loss and distribution primitives with hand-derived gradients."""

from __future__ import annotations

import numpy as np

from .engine import Tensor

LOG_2PI = np.log(2.0 * np.pi)


def mse(prediction: Tensor, target: Tensor) -> float:
    """Mean squared difference over all elements."""
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ValueError(f"mse shape mismatch: {prediction.shape} vs {target.shape}")
    d = prediction - target
    return float(np.mean(d * d))


def mse_grad(prediction: Tensor, target: Tensor) -> Tensor:
    """d mse / d prediction."""
    if prediction.shape != target.shape:
        raise ValueError(f"mse shape mismatch: {prediction.shape} vs {target.shape}")
    return 2.0 * (prediction - target) / prediction.size


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax, stable under large logits via max subtraction."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: Tensor) -> Tensor:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_entropy(logits: Tensor) -> float:
    """Entropy (nats) of the softmax distribution over a 1-D logit vector."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 1:
        raise ValueError(f"softmax_entropy expects a 1-D logit vector, got {logits.shape}")
    p = softmax(logits)
    logp = log_softmax(logits)
    return float(-(p * logp).sum())


def softmax_entropy_rows(logits: Tensor) -> Tensor:
    """Per-row entropy for a (batch, n) logit matrix."""
    p = softmax(logits)
    logp = log_softmax(logits)
    return -(p * logp).sum(axis=-1)


def softmax_entropy_rows_grad(logits: Tensor, upstream: Tensor) -> Tensor:
    """Gradient of sum(upstream_i * H_i) w.r.t. the logits."""
    p = softmax(logits)
    logp = log_softmax(logits)
    h = -(p * logp).sum(axis=-1, keepdims=True)
    return upstream[:, None] * (-p * (logp + h))


def categorical_log_prob(logits: Tensor, actions: Tensor) -> Tensor:
    """log pi(a | logits) per row."""
    logp = log_softmax(logits)
    return logp[np.arange(logits.shape[0]), actions]


def categorical_log_prob_grad(logits: Tensor, actions: Tensor, upstream: Tensor) -> Tensor:
    """Gradient of sum(upstream_i * log pi(a_i)) w.r.t. the logits."""
    p = softmax(logits)
    g = -p * upstream[:, None]
    g[np.arange(logits.shape[0]), actions] += upstream
    return g


def gaussian_log_prob(actions: Tensor, mean: Tensor, log_std: Tensor) -> Tensor:
    """Diagonal-Gaussian log density per row, summed over action dims."""
    inv_var = np.exp(-2.0 * log_std)
    d = actions - mean
    return (-0.5 * d * d * inv_var - log_std - 0.5 * LOG_2PI).sum(axis=-1)


def gaussian_log_prob_grads(actions: Tensor, mean: Tensor, log_std: Tensor,
                            upstream: Tensor) -> tuple[Tensor, Tensor]:
    """Gradients of sum(upstream_i * log_prob_i) w.r.t. mean and log_std."""
    inv_var = np.exp(-2.0 * log_std)
    d = actions - mean
    dmean = upstream[:, None] * d * inv_var
    dlog_std = upstream[:, None] * (d * d * inv_var - 1.0)
    return dmean, dlog_std


def gaussian_entropy_rows(log_std: Tensor) -> Tensor:
    """Per-row entropy of the diagonal Gaussian, summed over dims."""
    return (log_std + 0.5 * (LOG_2PI + 1.0)).sum(axis=-1)


def gaussian_entropy_rows_grad(log_std: Tensor, upstream: Tensor) -> Tensor:
    return np.broadcast_to(upstream[:, None], log_std.shape).copy()
