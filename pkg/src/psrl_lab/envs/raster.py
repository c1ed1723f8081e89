"""Schematic 40x40 grayscale renderers for the classic-control tasks.

Deterministic functions of the state vector; background stays 0.0 and all
drawn intensities live in (0, 1]. Distinct parts get distinct gray levels
so a conv net can tell cart from pole, rod from pivot, and so on.
"""

from __future__ import annotations

import numpy as np

SIZE = 40


def blank() -> np.ndarray:
    return np.zeros((SIZE, SIZE))


def draw_line(img: np.ndarray, r0: float, c0: float, r1: float, c1: float,
              value: float) -> None:
    """Parametric raster of a segment; keeps the max where strokes overlap."""
    steps = int(2 * max(abs(r1 - r0), abs(c1 - c0))) + 2
    t = np.linspace(0.0, 1.0, steps)
    rr = np.clip(np.rint(r0 + t * (r1 - r0)).astype(int), 0, SIZE - 1)
    cc = np.clip(np.rint(c0 + t * (c1 - c0)).astype(int), 0, SIZE - 1)
    img[rr, cc] = np.maximum(img[rr, cc], value)


def draw_blob(img: np.ndarray, r: float, c: float, half: int, value: float) -> None:
    r, c = int(round(r)), int(round(c))
    r0, r1 = max(r - half, 0), min(r + half + 1, SIZE)
    c0, c1 = max(c - half, 0), min(c + half + 1, SIZE)
    img[r0:r1, c0:c1] = np.maximum(img[r0:r1, c0:c1], value)


def render_cartpole(state: np.ndarray) -> np.ndarray:
    """Cart rectangle on a track row plus the pole segment; x in +-2.4."""
    x, _, theta, _ = state
    img = blank()
    col = 19.5 + (x / 2.4) * 16.0           # +-2.4 m -> +-16 px around center
    cart_row = 31
    img[cart_row:cart_row + 3,
        max(int(round(col)) - 3, 0):min(int(round(col)) + 4, SIZE)] = 1.0
    tip_r = cart_row - 1 - 14.0 * np.cos(theta)
    tip_c = col + 14.0 * np.sin(theta)
    draw_line(img, cart_row - 1, col, tip_r, tip_c, 0.6)
    return img


def render_mountain_car(state: np.ndarray) -> np.ndarray:
    """Hill profile as a faint curve, car as a bright blob sitting on it."""
    pos = state[0]
    img = blank()
    xs = np.linspace(-1.2, 0.6, 120)
    cols = 2.0 + (xs + 1.2) / 1.8 * 35.0
    rows = 22.0 - 10.0 * np.sin(3.0 * xs)   # y = sin(3x) in [-1, 1] -> rows 12..32
    rr = np.rint(rows).astype(int)
    cc = np.rint(cols).astype(int)
    img[rr, cc] = 0.4
    car_col = 2.0 + (pos + 1.2) / 1.8 * 35.0
    car_row = 22.0 - 10.0 * np.sin(3.0 * pos) - 2.0
    draw_blob(img, car_row, car_col, 1, 1.0)
    return img


def render_pendulum(state: np.ndarray) -> np.ndarray:
    """Rod from the center pivot; angle 0 points up."""
    cos_t, sin_t = state[0], state[1]
    img = blank()
    tip_r = 20.0 - 15.0 * cos_t
    tip_c = 20.0 + 15.0 * sin_t
    draw_line(img, 20.0, 20.0, tip_r, tip_c, 1.0)
    draw_blob(img, 20.0, 20.0, 1, 0.5)
    return img


def render_acrobot(state: np.ndarray) -> np.ndarray:
    """Two links; angles measured from the downward vertical."""
    c1, s1, c2, s2 = state[0], state[1], state[2], state[3]
    img = blank()
    # second link angle is t1 + t2: compose via angle-sum identities
    c12 = c1 * c2 - s1 * s2
    s12 = s1 * c2 + c1 * s2
    j_r = 20.0 + 9.0 * c1
    j_c = 20.0 + 9.0 * s1
    tip_r = j_r + 9.0 * c12
    tip_c = j_c + 9.0 * s12
    draw_line(img, 20.0, 20.0, j_r, j_c, 1.0)
    draw_line(img, j_r, j_c, tip_r, tip_c, 0.6)
    return img
