"""Classic-control POMDPs emitting (true state, observation) pairs."""

from . import acrobot, cartpole, mountain_car, pendulum  # noqa: F401  (register)
from .base import (
    Box,
    Discrete,
    Env,
    EnvConfig,
    EnvUsageError,
    Physics,
    StepResult,
    env_names,
    frame_stack,
    make_env,
    project_obs,
)
from .markov import (
    MarkovScoreReport,
    collect_windows,
    markov_noise_floor,
    markov_sufficiency_score,
)
from .raster import SIZE as RASTER_SIZE
from .tabular import TabularEnv

__all__ = [
    "Box",
    "Discrete",
    "Env",
    "EnvConfig",
    "EnvUsageError",
    "MarkovScoreReport",
    "Physics",
    "RASTER_SIZE",
    "StepResult",
    "TabularEnv",
    "collect_windows",
    "env_names",
    "frame_stack",
    "make_env",
    "markov_noise_floor",
    "markov_sufficiency_score",
    "project_obs",
]
