"""Under-powered car in a valley: the standard two-variable dynamics.

State (position, velocity); actions reverse/coast/forward; -1 reward per
step until the goal position on the right hill is reached.
"""

from __future__ import annotations

import numpy as np

from .base import Discrete, Physics, register
from .raster import render_mountain_car


class MountainCarPhysics(Physics):
    name = "mountain_car"
    state_dim = 2
    default_cap = 200
    state_low = np.array([-1.2, -0.07])
    state_high = np.array([0.6, 0.07])

    min_position = -1.2
    max_position = 0.6
    max_speed = 0.07
    goal_position = 0.5
    force = 0.001
    gravity_scale = 0.0025

    def action_space(self):
        return Discrete(3)

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def transition(self, state, action, rng):
        position, velocity = state
        velocity = velocity + (action - 1) * self.force \
            - self.gravity_scale * np.cos(3.0 * position)
        velocity = float(np.clip(velocity, -self.max_speed, self.max_speed))
        position = float(np.clip(position + velocity,
                                 self.min_position, self.max_position))
        if position <= self.min_position and velocity < 0.0:
            velocity = 0.0
        terminal = position >= self.goal_position
        return np.array([position, velocity]), -1.0, bool(terminal)

    def render(self, state):
        return render_mountain_car(state)


@register("mountain_car")
def _build_mountain_car() -> MountainCarPhysics:
    return MountainCarPhysics()
