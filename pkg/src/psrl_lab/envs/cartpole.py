"""Cart-pole balancing from the standard pole-on-cart equations.

State (x, x_dot, theta, theta_dot); +1 reward per step alive; episode ends
when the pole tips past 12 degrees or the cart leaves +-2.4 m. Both the
discrete two-action task and a continuous-force variant live here.
"""

from __future__ import annotations

import numpy as np

from .base import Box, Discrete, Physics, register
from .raster import render_cartpole

TWELVE_DEGREES = 12.0 * np.pi / 180.0


class CartPolePhysics(Physics):
    name = "cartpole"
    state_dim = 4
    default_cap = 200
    state_low = np.array([-2.4, -3.0, -TWELVE_DEGREES, -3.5])
    state_high = np.array([2.4, 3.0, TWELVE_DEGREES, 3.5])

    gravity = 9.8
    cart_mass = 1.0
    pole_mass = 0.1
    pole_half_length = 0.5
    force_mag = 10.0
    tau = 0.02

    def action_space(self):
        return Discrete(2)

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-0.05, 0.05, size=4)

    def _force(self, action) -> float:
        return self.force_mag if action == 1 else -self.force_mag

    def transition(self, state, action, rng):
        x, x_dot, theta, theta_dot = state
        force = self._force(action)
        total_mass = self.cart_mass + self.pole_mass
        pml = self.pole_mass * self.pole_half_length
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        temp = (force + pml * theta_dot ** 2 * sin_t) / total_mass
        theta_acc = (self.gravity * sin_t - cos_t * temp) / (
            self.pole_half_length
            * (4.0 / 3.0 - self.pole_mass * cos_t ** 2 / total_mass))
        x_acc = temp - pml * theta_acc * cos_t / total_mass
        # semi-implicit Euler: velocities first, positions with new velocities
        x_dot = x_dot + self.tau * x_acc
        x = x + self.tau * x_dot
        theta_dot = theta_dot + self.tau * theta_acc
        theta = theta + self.tau * theta_dot
        next_state = np.array([x, x_dot, theta, theta_dot])
        terminal = bool(abs(x) > 2.4 or abs(theta) > TWELVE_DEGREES)
        return next_state, 1.0, terminal

    def render(self, state):
        return render_cartpole(state)


@register("cartpole")
def _build_cartpole() -> CartPolePhysics:
    return CartPolePhysics()


class ContinuousCartPolePhysics(CartPolePhysics):
    """Same dynamics with force = action * max force, action in [-1, 1]."""

    name = "cartpole_cont"

    def action_space(self):
        return Box(np.array([-1.0]), np.array([1.0]))

    def _force(self, action) -> float:
        a = float(np.asarray(action).reshape(-1)[0])
        return self.force_mag * a


@register("cartpole_cont")
def _build_cartpole_cont() -> ContinuousCartPolePhysics:
    return ContinuousCartPolePhysics()
