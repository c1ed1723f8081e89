"""Finite MDPs embedded in a metric state space, plus bounded-error estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TabularMdp:
    """Exact transition/reward tables over states embedded as points in R^d.

    transitions has shape (S, A, S) with stochastic rows; rewards (S, A).
    embedding has shape (S, d) and must be injective. Optional nuisance
    tables (indexed by a discrete factor) perturb the base dynamics.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    embedding: np.ndarray
    initial_dist: np.ndarray | None = None
    nuisance_transitions: list[np.ndarray] = field(default_factory=list)
    nuisance_rewards: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        s, a, s2 = self.transitions.shape
        if s != s2 or self.rewards.shape != (s, a):
            raise ValueError("transition/reward table shapes disagree")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        row_sums = self.transitions.sum(axis=2)
        if not np.allclose(row_sums, 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to 1 within 1e-12")
        if not np.isfinite(self.rewards).all():
            raise ValueError("rewards must be finite")
        if self.embedding.ndim != 2 or self.embedding.shape[0] != s:
            raise ValueError("embedding must be (num_states, d)")
        if len(np.unique(self.embedding, axis=0)) != s:
            raise ValueError("embedding must be injective")
        if self.initial_dist is None:
            self.initial_dist = np.full(s, 1.0 / s)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    def min_embedding_gap(self) -> float:
        """Smallest pairwise distance between embedded states (exact)."""
        pts = self.embedding
        diffs = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diffs * diffs).sum(axis=-1))
        dist[np.diag_indices_from(dist)] = np.inf
        return float(dist.min())

    def snap(self, points: np.ndarray) -> np.ndarray:
        """Nearest embedded state index for each row; ties break to lowest index."""
        points = np.atleast_2d(points)
        d = points[:, None, :] - self.embedding[None, :, :]
        return np.argmin((d * d).sum(axis=-1), axis=1)

    def with_nuisance(self, delta: float, delta_t: np.ndarray,
                      delta_r: np.ndarray) -> "TabularMdp":
        """Perturbed copy: T + delta*delta_t re-normalized, R + delta*delta_r."""
        if delta == 0.0:
            # avoid re-normalization noise so the unperturbed copy is bit-equal
            return TabularMdp(self.transitions, self.rewards, self.gamma,
                              self.embedding, self.initial_dist)
        t = self.transitions + delta * delta_t
        t = np.clip(t, 0.0, None)
        sums = t.sum(axis=2, keepdims=True)
        if np.any(sums <= 0.0):
            raise ValueError("nuisance perturbation left an all-zero transition row")
        t = t / sums
        return TabularMdp(t, self.rewards + delta * delta_r, self.gamma,
                          self.embedding, self.initial_dist)


class StateEstimator:
    """Perturb-then-report state estimate with a hard error radius.

    Each state's embedded point is shifted by a fixed offset whose norm is
    at most epsilon; the estimate fed to downstream policies is that point.
    """

    def __init__(self, mdp: TabularMdp, epsilon: float,
                 offsets: np.ndarray | None = None,
                 rng: np.random.Generator | None = None):
        if epsilon < 0.0:
            raise ValueError("epsilon must be non-negative")
        self.epsilon = epsilon
        d = mdp.embedding.shape[1]
        n = mdp.num_states
        if offsets is not None:
            offsets = np.asarray(offsets, dtype=np.float64)
            norms = np.sqrt((offsets * offsets).sum(axis=1))
            if np.any(norms > epsilon + 1e-12):
                raise ValueError("offset norms exceed the declared radius")
        elif rng is not None:
            directions = rng.normal(size=(n, d))
            directions /= np.maximum(np.sqrt((directions ** 2).sum(axis=1, keepdims=True)), 1e-300)
            radii = epsilon * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / d)
            offsets = directions * radii
        else:
            offsets = np.zeros((n, d))
        self.offsets = offsets

    def estimates(self, mdp: TabularMdp) -> np.ndarray:
        """Estimated embedded point per state, shape (S, d)."""
        return mdp.embedding + self.offsets

    def scaled(self, mdp: TabularMdp, epsilon: float) -> "StateEstimator":
        """Same offset directions, radius rescaled to a new epsilon."""
        if self.epsilon == 0.0:
            return StateEstimator(mdp, epsilon)
        return StateEstimator(mdp, epsilon,
                              offsets=self.offsets * (epsilon / self.epsilon))


def random_grid_mdp(rng: np.random.Generator, max_states: int = 10,
                    max_actions: int = 4, gamma_range: tuple[float, float] = (0.8, 0.99),
                    dims: int | None = None) -> TabularMdp:
    """Random MDP with states on a unit-spaced integer grid in R^1 or R^2."""
    n = int(rng.integers(2, max_states + 1))
    a = int(rng.integers(2, max_actions + 1))
    d = int(rng.integers(1, 3)) if dims is None else dims
    if d == 1:
        embedding = np.arange(n, dtype=np.float64)[:, None]
    else:
        side = int(np.ceil(np.sqrt(n)))
        coords = [(i, j) for i in range(side) for j in range(side)][:n]
        embedding = np.asarray(coords, dtype=np.float64)
    # Dirichlet-style rows: exponential draws normalized, occasionally sparsified
    raw = rng.exponential(size=(n, a, n)) + 1e-3
    mask = rng.random((n, a, n)) < 0.5
    raw = np.where(mask, raw, 1e-3)
    transitions = raw / raw.sum(axis=2, keepdims=True)
    rewards = rng.uniform(-1.0, 1.0, size=(n, a))
    gamma = float(rng.uniform(*gamma_range))
    return TabularMdp(transitions, rewards, gamma, embedding)
