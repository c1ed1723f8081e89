"""Finite MDPs dressed up as environments, for exact-oracle agent tests.

The embedded state coordinates play the role of both state and (identity)
observation. Episodes are continuing: never terminal, truncated at the cap,
so bootstrapped targets see the discounted continuing problem whose Q* the
tabular solvers compute exactly.
"""

from __future__ import annotations

import numpy as np

from ..theory.mdp import TabularMdp
from .base import Discrete, EnvUsageError, StepResult


class TabularEnv:
    """Duck-typed stand-in for envs.Env backed by exact transition tables."""

    def __init__(self, mdp: TabularMdp, episode_cap: int = 50, seed: int = 0):
        self.mdp = mdp
        self.episode_cap = episode_cap
        self.action_space = Discrete(mdp.num_actions)
        self.state_dim = mdp.embedding.shape[1]
        self._rng = np.random.default_rng(seed)
        self._index: int | None = None
        self._steps = 0
        self._finished = True
        lo = mdp.embedding.min(axis=0)
        hi = mdp.embedding.max(axis=0)
        pad = np.where(hi - lo < 1e-9, 0.5, 0.0)
        self._low, self._high = lo - pad, hi + pad

    @property
    def observation_shape(self) -> tuple[int, ...]:
        return (self.state_dim,)

    @property
    def state_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self._low, self._high

    @property
    def state_index(self) -> int:
        return int(self._index)

    def normalize_state(self, state: np.ndarray) -> np.ndarray:
        return 2.0 * (state - self._low) / (self._high - self._low) - 1.0

    def denormalize_state(self, normalized: np.ndarray) -> np.ndarray:
        return self._low + 0.5 * (normalized + 1.0) * (self._high - self._low)

    def reset(self, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._index = int(self._rng.choice(self.mdp.num_states,
                                           p=self.mdp.initial_dist))
        self._steps = 0
        self._finished = False
        point = self.mdp.embedding[self._index].copy()
        return point, point.copy()

    def step(self, action) -> StepResult:
        if self._finished or self._index is None:
            raise EnvUsageError("step called on a finished episode; reset first")
        if not self.action_space.contains(action):
            raise ValueError(f"action {action!r} outside {self.action_space}")
        reward = float(self.mdp.rewards[self._index, action])
        self._index = int(self._rng.choice(
            self.mdp.num_states, p=self.mdp.transitions[self._index, action]))
        self._steps += 1
        truncated = self._steps >= self.episode_cap
        self._finished = truncated
        point = self.mdp.embedding[self._index].copy()
        return StepResult(point, point.copy(), reward, truncated, truncated)
