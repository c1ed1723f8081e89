"""Transition storage: a preallocated ring buffer with uniform sampling.

Every transition carries BOTH the true state and the observation — the
framework's defining training-time assumption. Off-policy training keeps
a persistent ring; on-policy training fills, drains, and clears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Batch:
    states: np.ndarray            # (B, n)
    observations: np.ndarray      # (B, *obs_shape)
    actions: np.ndarray           # (B,) int or (B, action_dim) float
    rewards: np.ndarray           # (B,)
    next_states: np.ndarray
    next_observations: np.ndarray
    done: np.ndarray              # (B,) bool: episode ended here
    truncated: np.ndarray         # (B,) bool: ended only because of the cap
    log_probs: np.ndarray | None  # (B,) behavior log-probs, on-policy only

    @property
    def size(self) -> int:
        return self.rewards.shape[0]

    @property
    def bootstrap_done(self) -> np.ndarray:
        """Terminal flags for TD targets: cap hits still bootstrap."""
        return self.done & ~self.truncated


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int,
                 obs_shape: tuple[int, ...], action_shape: tuple[int, ...] = (),
                 store_log_probs: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.cursor = 0
        self.size = 0
        self._states = np.zeros((capacity, state_dim))
        self._obs = np.zeros((capacity,) + tuple(obs_shape))
        if action_shape:
            self._actions = np.zeros((capacity,) + tuple(action_shape))
        else:
            self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._next_obs = np.zeros((capacity,) + tuple(obs_shape))
        self._done = np.zeros(capacity, dtype=bool)
        self._truncated = np.zeros(capacity, dtype=bool)
        self._log_probs = np.zeros(capacity) if store_log_probs else None

    def __len__(self) -> int:
        return self.size

    def push(self, state, obs, action, reward, next_state, next_obs,
             done: bool, truncated: bool, log_prob: float | None = None):
        i = self.cursor
        self._states[i] = state
        self._obs[i] = obs
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._next_obs[i] = next_obs
        self._done[i] = done
        self._truncated[i] = truncated
        if self._log_probs is not None:
            if log_prob is None:
                raise ValueError("on-policy buffer requires a behavior log-prob")
            self._log_probs[i] = log_prob
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _gather(self, idx: np.ndarray) -> Batch:
        return Batch(
            states=self._states[idx].copy(),
            observations=self._obs[idx].copy(),
            actions=self._actions[idx].copy(),
            rewards=self._rewards[idx].copy(),
            next_states=self._next_states[idx].copy(),
            next_observations=self._next_obs[idx].copy(),
            done=self._done[idx].copy(),
            truncated=self._truncated[idx].copy(),
            log_probs=None if self._log_probs is None
            else self._log_probs[idx].copy(),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform over current contents, with replacement."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return self._gather(rng.integers(self.size, size=batch_size))

    def drain(self) -> Batch:
        """All contents in insertion order, then clear (on-policy rollouts)."""
        if self.size == 0:
            raise ValueError("cannot drain an empty buffer")
        if self.size == self.capacity:
            order = np.arange(self.capacity)
            order = np.roll(order, -self.cursor)
        else:
            order = np.arange(self.size)
        batch = self._gather(order)
        self.clear()
        return batch

    def clear(self) -> None:
        self.cursor = 0
        self.size = 0
