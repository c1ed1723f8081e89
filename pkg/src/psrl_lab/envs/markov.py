"""Empirical test of whether a k-frame observation window is Markov.

The score asks: does conditioning on one frame OLDER than the window
change the distribution of the next state change? Formally it is the
count-weighted total-variation gap between

    P(bin(s_{t+1} - s_t) | window bins, action)          and
    P(bin(s_{t+1} - s_t) | window bins, action, extra frame bin)

averaged over state dimensions. Binning the per-step *change* rather
than the raw next state keeps the signal visible at coarse resolution:
hidden velocity shows up directly in the change distribution.

A diagnostic, not a benchmark: meant for low-dimensional observation
lifts (identity, small projections) where coarse cells stay populated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .base import EnvConfig, make_env

MIN_SAMPLES = 10_000


@dataclass
class MarkovScoreReport:
    score: float
    per_dim: np.ndarray
    coverage: float              # sample mass in cells meeting min_count
    num_samples: int
    k: int
    warnings: list[str] = field(default_factory=list)


def _quantile_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Interior quantile cut points; duplicates collapse for spiky data."""
    qs = np.linspace(0.0, 1.0, bins + 1)[1:-1]
    return np.unique(np.quantile(values, qs))


def _digitize_rows(data: np.ndarray, bins: int) -> np.ndarray:
    out = np.empty(data.shape, dtype=np.int64)
    for d in range(data.shape[1]):
        edges = _quantile_edges(data[:, d], bins)
        out[:, d] = np.searchsorted(edges, data[:, d], side="right")
    return out


def _cell_ids(parts: list[np.ndarray]) -> np.ndarray:
    ids = np.zeros(len(parts[0]), dtype=np.int64)
    for col in parts:
        ids = ids * (int(col.max()) + 1) + col
    return ids


def _tv_score(w_bins: np.ndarray, e_bins: np.ndarray, actions: np.ndarray,
              d_bins: np.ndarray, min_count: int) -> tuple[float, np.ndarray, float]:
    """Count-weighted TV between base and extra-conditioned delta laws."""
    base_parts = [w_bins[:, d] for d in range(w_bins.shape[1])] + [actions]
    base_ids = _cell_ids(base_parts)
    fine_ids = _cell_ids(base_parts + [e_bins[:, d] for d in range(e_bins.shape[1])])
    n = len(base_ids)
    base_u, base_inv = np.unique(base_ids, return_inverse=True)
    fine_u, fine_inv = np.unique(fine_ids, return_inverse=True)
    # parent base cell of each fine cell (any representative row works)
    fine_first = np.zeros(len(fine_u), dtype=np.int64)
    fine_first[fine_inv] = np.arange(n)
    parent = base_inv[fine_first]
    fine_n = np.bincount(fine_inv, minlength=len(fine_u))
    weight = np.where(fine_n >= min_count, fine_n, 0)
    total = weight.sum()
    coverage = float(total) / n

    per_dim = np.zeros(d_bins.shape[1])
    for d in range(d_bins.shape[1]):
        y = d_bins[:, d]
        num_y = int(y.max()) + 1
        base_counts = np.bincount(base_inv * num_y + y,
                                  minlength=len(base_u) * num_y
                                  ).reshape(len(base_u), num_y)
        fine_counts = np.bincount(fine_inv * num_y + y,
                                  minlength=len(fine_u) * num_y
                                  ).reshape(len(fine_u), num_y)
        base_p = base_counts / base_counts.sum(axis=1, keepdims=True)
        fine_p = fine_counts / np.maximum(fine_n, 1)[:, None]
        tv = 0.5 * np.abs(fine_p - base_p[parent]).sum(axis=1)
        per_dim[d] = float((weight * tv).sum() / total) if total else 0.0
    return float(per_dim.mean()), per_dim, coverage


def _window_features(history: list[np.ndarray], k: int) -> tuple[np.ndarray, np.ndarray]:
    """Bijective re-coordinatization of (window, extra frame) for binning.

    The window becomes (current frame, backward differences inside the
    window); the extra frame becomes the difference crossing the window's
    older edge. Differences live at the per-step motion scale, so coarse
    quantile bins can actually resolve the hidden-velocity information that
    raw-coordinate bins wash out.
    """
    frames = history[-(k + 1):]
    feats = [frames[-1]]
    for i in range(1, k):
        feats.append(frames[-i] - frames[-i - 1])
    window = np.concatenate(feats)
    extra = frames[1] - frames[0]
    return window, extra


def collect_windows(config: EnvConfig, k: int, num_samples: int,
                    seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Random-policy rollouts -> (window feats, extra feats, action, state delta).

    Windows never straddle an episode boundary; the extra information is
    the one frame immediately older than the k-window, encoded as the
    difference across the window's older edge (see _window_features).
    """
    cfg = dataclasses.replace(config, frame_stack=1, seed=seed)
    env = make_env(cfg)
    rng = np.random.default_rng(seed)
    windows, extras, actions, deltas = [], [], [], []
    action_space = env.action_space
    discrete = hasattr(action_space, "n")
    while len(windows) < num_samples:
        state, obs = env.reset(int(rng.integers(2 ** 31)))
        history = [obs]
        prev_state = state
        done = False
        while not done and len(windows) < num_samples:
            action = action_space.sample(rng)
            result = env.step(action)
            if len(history) >= k + 1:
                window, extra = _window_features(history, k)
                windows.append(window)
                extras.append(extra)
                actions.append(action if discrete else 0)
                deltas.append(result.next_state - prev_state)
            history.append(result.next_observation)
            prev_state = result.next_state
            done = result.done
    return (np.asarray(windows), np.asarray(extras),
            np.asarray(actions, dtype=np.int64), np.asarray(deltas))


def markov_sufficiency_score(config: EnvConfig, k: int,
                             num_samples: int = MIN_SAMPLES, seed: int = 0,
                             bins: int = 6, min_count: int = 8) -> MarkovScoreReport:
    """Score near 0 means the k-window is (approximately) Markov."""
    if num_samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples for stable bins")
    if k < 1:
        raise ValueError("window size k must be >= 1")
    windows, extras, actions, deltas = collect_windows(config, k, num_samples, seed)
    score, per_dim, coverage = _tv_score(
        _digitize_rows(windows, bins), _digitize_rows(extras, bins),
        actions, _digitize_rows(deltas, bins), min_count)
    warnings = []
    if coverage < 0.5:
        warnings.append(
            f"only {coverage:.0%} of samples sit in cells with >= {min_count} "
            f"visits; score is noise-dominated")
    return MarkovScoreReport(score, per_dim, coverage, len(actions), k, warnings)


def markov_noise_floor(num_samples: int = MIN_SAMPLES, seed: int = 0,
                       bins: int = 6, min_count: int = 8,
                       multiplier: float = 2.0) -> float:
    """Score of a synthetic chain that is Markov by construction, scaled up.

    The chain mimics smooth second-order motion (position + velocity, both
    observed) with genuine process noise, so its score is pure binning and
    sampling artifact. A known-Markov window should land below this floor.
    """
    rng = np.random.default_rng(seed)
    state = np.zeros(2)
    history = [state.copy()]
    windows, extras, actions, deltas = [], [], [], []
    while len(windows) < num_samples:
        action = int(rng.integers(3))
        vel = 0.9 * state[1] + 0.05 * (action - 1) + 0.02 * rng.standard_normal()
        nxt = np.array([state[0] + 0.05 * vel, vel])
        if len(history) >= 2:
            # mirror collect_windows at k=1: window is the pre-action frame
            window, extra = _window_features(history, 1)
            windows.append(window)
            extras.append(extra)
            actions.append(action)
            deltas.append(nxt - history[-1])
        history.append(nxt)
        state = nxt
    score, _, _ = _tv_score(
        _digitize_rows(np.asarray(windows), bins),
        _digitize_rows(np.asarray(extras), bins),
        np.asarray(actions, dtype=np.int64),
        _digitize_rows(np.asarray(deltas), bins), min_count)
    return multiplier * score
