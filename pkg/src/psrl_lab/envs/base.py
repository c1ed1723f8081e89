"""Environment core: action spaces, config, POMDP observation wrapper.

Physics backends implement state-only dynamics; `Env` owns the RNG,
episode bookkeeping, the observation lift (identity / projection /
raster) and frame stacking, and hands out (true state, observation)
pairs — the training-time contract of partially supervised RL.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class EnvUsageError(RuntimeError):
    """Stepping a finished episode or other out-of-order calls."""


@dataclass(frozen=True)
class Discrete:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("discrete action space needs at least 2 actions")

    def contains(self, action) -> bool:
        return isinstance(action, (int, np.integer)) and 0 <= int(action) < self.n

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))


@dataclass(frozen=True)
class Box:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "low", np.asarray(self.low, dtype=np.float64))
        object.__setattr__(self, "high", np.asarray(self.high, dtype=np.float64))
        if not (self.low < self.high).all():
            raise ValueError("Box requires low < high componentwise")

    @property
    def dims(self) -> int:
        return self.low.size

    def contains(self, action) -> bool:
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        return a.size == self.dims and bool(
            (a >= self.low - 1e-9).all() and (a <= self.high + 1e-9).all())

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)


@dataclass
class StepResult:
    next_state: np.ndarray
    next_observation: np.ndarray
    reward: float
    done: bool            # episode over (terminal or cap)
    truncated: bool       # over only because the cap was hit


@dataclass
class EnvConfig:
    """What to build: physics backend, observation lift, episode shape."""

    name: str = "cartpole"
    obs_mode: str = "identity"           # identity | projection | raster
    frame_stack: int = 1
    noise_sigma: float = 0.0
    obs_dim: int | None = None           # projection output dim m (default 4n)
    projection_matrix: np.ndarray | None = None
    episode_cap: int | None = None       # default per physics backend
    physics: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.frame_stack < 1:
            raise ValueError("frame_stack must be >= 1")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        if self.episode_cap is not None and self.episode_cap < 1:
            raise ValueError("episode_cap must be >= 1")
        if self.obs_mode not in ("identity", "projection", "raster"):
            raise ValueError(f"unknown obs_mode {self.obs_mode!r}")


class Physics:
    """State-only dynamics backend. Subclasses define the classic task."""

    name: str = ""
    state_dim: int = 0
    default_cap: int = 200
    # affine normalization bounds for supervised targets, shape (state_dim,)
    state_low: np.ndarray
    state_high: np.ndarray

    def action_space(self):
        raise NotImplementedError

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def transition(self, state: np.ndarray, action,
                   rng: np.random.Generator) -> tuple[np.ndarray, float, bool]:
        """Returns (next_state, reward, terminal)."""
        raise NotImplementedError

    def render(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def frame_stack(history: list[np.ndarray], k: int) -> np.ndarray:
    """Stack the last k observations, repeating the earliest when short.

    Vector observations concatenate oldest-first; image observations stack
    as leading channels in the same order.
    """
    if k < 1:
        raise ValueError("frame_stack window must be >= 1")
    frames = history[-k:]
    if not frames:
        raise ValueError("frame_stack needs at least one observation")
    frames = [frames[0]] * (k - len(frames)) + frames
    if k == 1:
        return frames[0]
    if frames[0].ndim == 1:
        return np.concatenate(frames)
    return np.stack(frames, axis=0)


def project_obs(state: np.ndarray, matrix: np.ndarray, sigma: float,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """o = M s + Gaussian(0, sigma^2); the run-fixed M makes the lift injective."""
    o = matrix @ state
    if sigma > 0.0:
        if rng is None:
            raise ValueError("projection noise requires an rng")
        o = o + sigma * rng.standard_normal(o.shape)
    return o


class Env:
    """A physics backend lifted into a POMDP with (state, observation) pairs."""

    def __init__(self, physics: Physics, config: EnvConfig):
        self.physics = physics
        self.config = config
        self.action_space = physics.action_space()
        self.episode_cap = config.episode_cap or physics.default_cap
        self._rng = np.random.default_rng(config.seed)
        self._frames: list[np.ndarray] = []
        self._state: np.ndarray | None = None
        self._steps = 0
        self._finished = True
        if config.obs_mode == "projection":
            if config.projection_matrix is not None:
                self.projection_matrix = np.asarray(config.projection_matrix,
                                                    dtype=np.float64)
            else:
                m = config.obs_dim or 4 * physics.state_dim
                if m <= physics.state_dim:
                    raise ValueError(
                        f"projection dim {m} must exceed state dim "
                        f"{physics.state_dim}")
                # fixed per run: drawn from the construction seed, not reset seeds
                self.projection_matrix = np.random.default_rng(
                    config.seed).standard_normal((m, physics.state_dim))
        else:
            self.projection_matrix = None

    # -- observation lift ---------------------------------------------------

    def observe_single(self, state: np.ndarray) -> np.ndarray:
        mode = self.config.obs_mode
        if mode == "identity":
            return state.copy()
        if mode == "projection":
            return project_obs(state, self.projection_matrix,
                               self.config.noise_sigma, self._rng)
        return self.physics.render(state)

    def _stacked(self) -> np.ndarray:
        return frame_stack(self._frames, self.config.frame_stack)

    @property
    def observation_shape(self) -> tuple[int, ...]:
        probe = self.observe_single(np.zeros(self.physics.state_dim))
        return frame_stack([probe], self.config.frame_stack).shape

    @property
    def state_dim(self) -> int:
        return self.physics.state_dim

    @property
    def state_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.physics.state_low, self.physics.state_high

    # -- normalization for supervised targets -------------------------------

    def normalize_state(self, state: np.ndarray) -> np.ndarray:
        low, high = self.physics.state_low, self.physics.state_high
        return 2.0 * (state - low) / (high - low) - 1.0

    def denormalize_state(self, normalized: np.ndarray) -> np.ndarray:
        low, high = self.physics.state_low, self.physics.state_high
        return low + 0.5 * (normalized + 1.0) * (high - low)

    # -- episode interface ---------------------------------------------------

    def reset(self, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self.physics.sample_initial(self._rng)
        self._steps = 0
        self._finished = False
        self._frames = [self.observe_single(self._state)]
        return self._state.copy(), self._stacked()

    def step(self, action) -> StepResult:
        if self._finished or self._state is None:
            raise EnvUsageError("step called on a finished episode; reset first")
        if not self.action_space.contains(action):
            raise ValueError(f"action {action!r} outside {self.action_space}")
        next_state, reward, terminal = self.physics.transition(
            self._state, action, self._rng)
        self._state = next_state
        self._steps += 1
        truncated = not terminal and self._steps >= self.episode_cap
        self._finished = terminal or truncated
        self._frames.append(self.observe_single(next_state))
        if len(self._frames) > self.config.frame_stack:
            self._frames = self._frames[-self.config.frame_stack:]
        return StepResult(next_state.copy(), self._stacked(), float(reward),
                          self._finished, truncated)


_REGISTRY: dict[str, Callable[[], Physics]] = {}


def register(name: str):
    def deco(factory):
        _REGISTRY[name] = factory
        return factory
    return deco


def env_names() -> list[str]:
    return sorted(_REGISTRY)


def make_env(config: EnvConfig) -> Env:
    if config.name not in _REGISTRY:
        raise ValueError(
            f"unknown env {config.name!r}; choose from {env_names()}")
    physics = _REGISTRY[config.name]()
    for key, value in config.physics.items():
        if not hasattr(physics, key):
            raise ValueError(f"{config.name} has no physics constant {key!r}")
        setattr(physics, key, value)
    return Env(physics, config)
