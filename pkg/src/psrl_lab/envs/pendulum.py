"""Torque-limited pendulum swing-up with quadratic state/effort costs.

Exposed state is (cos theta, sin theta, theta_dot); the wrapped angle is
internal. Never terminal: episodes end only at the cap. Optional viscous
damping (default off) for energy-dissipation experiments.
"""

from __future__ import annotations

import numpy as np

from .base import Box, Physics, register
from .raster import render_pendulum


def wrap_angle(theta: float) -> float:
    return ((theta + np.pi) % (2.0 * np.pi)) - np.pi


class PendulumPhysics(Physics):
    name = "pendulum"
    state_dim = 3
    default_cap = 200
    state_low = np.array([-1.0, -1.0, -8.0])
    state_high = np.array([1.0, 1.0, 8.0])

    max_speed = 8.0
    max_torque = 2.0
    dt = 0.05
    gravity = 10.0
    mass = 1.0
    length = 1.0
    damping = 0.0

    def action_space(self):
        return Box(np.array([-self.max_torque]), np.array([self.max_torque]))

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        theta = rng.uniform(-np.pi, np.pi)
        theta_dot = rng.uniform(-1.0, 1.0)
        return self._pack(theta, theta_dot)

    @staticmethod
    def _pack(theta: float, theta_dot: float) -> np.ndarray:
        return np.array([np.cos(theta), np.sin(theta), theta_dot])

    @staticmethod
    def angle_of(state: np.ndarray) -> float:
        return float(np.arctan2(state[1], state[0]))

    def transition(self, state, action, rng):
        theta = self.angle_of(state)
        theta_dot = float(state[2])
        u = float(np.clip(np.asarray(action).reshape(-1)[0],
                          -self.max_torque, self.max_torque))
        cost = wrap_angle(theta) ** 2 + 0.1 * theta_dot ** 2 + 0.001 * u ** 2
        g, m, length, dt = self.gravity, self.mass, self.length, self.dt
        theta_acc = (3.0 * g / (2.0 * length) * np.sin(theta)
                     + 3.0 / (m * length ** 2) * u
                     - self.damping * theta_dot)
        theta_dot = float(np.clip(theta_dot + theta_acc * dt,
                                  -self.max_speed, self.max_speed))
        theta = wrap_angle(theta + theta_dot * dt)
        return self._pack(theta, theta_dot), -float(cost), False

    def energy(self, state: np.ndarray) -> float:
        """KE + PE with PE zero at the bottom; diagnostic for damping tests."""
        theta = self.angle_of(state)
        theta_dot = float(state[2])
        # uniform rod pivoting at one end: I = m l^2 / 3, COM at l/2
        kinetic = 0.5 * (self.mass * self.length ** 2 / 3.0) * theta_dot ** 2
        potential = self.mass * self.gravity * (self.length / 2.0) \
            * (1.0 + np.cos(theta))
        return kinetic + potential

    def render(self, state):
        return render_pendulum(state)


@register("pendulum")
def _build_pendulum() -> PendulumPhysics:
    return PendulumPhysics()
