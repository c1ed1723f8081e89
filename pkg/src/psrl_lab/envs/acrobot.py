"""Two-link underactuated swing-up (torque on the second joint only).

Exposed state is (cos t1, sin t1, cos t2, sin t2, t1_dot, t2_dot); the
episode ends when the tip rises one link-length above the pivot. The
standard book dynamics are integrated by semi-implicit Euler substeps.
"""

from __future__ import annotations

import numpy as np

from .base import Discrete, Physics, register
from .pendulum import wrap_angle
from .raster import render_acrobot


class AcrobotPhysics(Physics):
    name = "acrobot"
    state_dim = 6
    default_cap = 500
    state_low = np.array([-1.0, -1.0, -1.0, -1.0, -4.0 * np.pi, -9.0 * np.pi])
    state_high = np.array([1.0, 1.0, 1.0, 1.0, 4.0 * np.pi, 9.0 * np.pi])

    link_mass = 1.0
    link_length = 1.0
    link_com = 0.5
    link_inertia = 1.0
    gravity = 9.8
    dt = 0.05
    substeps = 4
    max_vel_1 = 4.0 * np.pi
    max_vel_2 = 9.0 * np.pi

    def action_space(self):
        return Discrete(3)

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        t1, t2, d1, d2 = rng.uniform(-0.1, 0.1, size=4)
        return self._pack(t1, t2, d1, d2)

    @staticmethod
    def _pack(t1, t2, d1, d2) -> np.ndarray:
        return np.array([np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2), d1, d2])

    @staticmethod
    def angles_of(state: np.ndarray) -> tuple[float, float, float, float]:
        t1 = float(np.arctan2(state[1], state[0]))
        t2 = float(np.arctan2(state[3], state[2]))
        return t1, t2, float(state[4]), float(state[5])

    def _accelerations(self, t1, t2, d1, d2, torque):
        m, l1 = self.link_mass, self.link_length
        lc, inertia = self.link_com, self.link_inertia
        g = self.gravity
        cos2 = np.cos(t2)
        dd1 = m * lc ** 2 + m * (l1 ** 2 + lc ** 2 + 2 * l1 * lc * cos2) \
            + 2 * inertia
        dd2 = m * (lc ** 2 + l1 * lc * cos2) + inertia
        phi2 = m * lc * g * np.cos(t1 + t2 - np.pi / 2.0)
        phi1 = (-m * l1 * lc * d2 ** 2 * np.sin(t2)
                - 2 * m * l1 * lc * d2 * d1 * np.sin(t2)
                + (m * lc + m * l1) * g * np.cos(t1 - np.pi / 2.0) + phi2)
        acc2 = (torque + dd2 / dd1 * phi1
                - m * l1 * lc * d1 ** 2 * np.sin(t2) - phi2) \
            / (m * lc ** 2 + inertia - dd2 ** 2 / dd1)
        acc1 = -(dd2 * acc2 + phi1) / dd1
        return acc1, acc2

    def transition(self, state, action, rng):
        t1, t2, d1, d2 = self.angles_of(state)
        torque = float(action) - 1.0
        sub_dt = self.dt
        for _ in range(self.substeps):
            acc1, acc2 = self._accelerations(t1, t2, d1, d2, torque)
            d1 = float(np.clip(d1 + acc1 * sub_dt, -self.max_vel_1, self.max_vel_1))
            d2 = float(np.clip(d2 + acc2 * sub_dt, -self.max_vel_2, self.max_vel_2))
            t1 = wrap_angle(t1 + d1 * sub_dt)
            t2 = wrap_angle(t2 + d2 * sub_dt)
        terminal = bool(-np.cos(t1) - np.cos(t2 + t1) > 1.0)
        reward = 0.0 if terminal else -1.0
        return self._pack(t1, t2, d1, d2), reward, terminal

    def render(self, state):
        return render_acrobot(state)


@register("acrobot")
def _build_acrobot() -> AcrobotPhysics:
    return AcrobotPhysics()
