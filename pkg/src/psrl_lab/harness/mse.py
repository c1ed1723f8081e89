"""Held-out state-prediction error: the interpretability comparison.

The supervised predictor is scored directly (no refit). The end-to-end
baseline's embedding head carries no supervised meaning, so it gets the
best case we can give it: a linear map onto states, least-squares fitted
on a calibration split of the held-out trajectories, scored on the rest.
All numbers are in raw state units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..agents.bundle import PolicyBundle, load_bundle
from .config import build_configs
from .runner import HELDOUT_SEED_BASE, assert_heldout_disjoint, read_manifest


def collect_heldout(env, bundle: PolicyBundle, episodes: int,
                    seed_base: int) -> tuple[np.ndarray, np.ndarray]:
    """Greedy execution-policy rollouts on reserved seeds -> (states, obs)."""
    if episodes < 1:
        raise ValueError("held-out collection needs at least one episode")
    states, obses = [], []
    for i in range(episodes):
        state, obs = env.reset(seed_base + i)
        done = False
        while not done:
            states.append(state)
            obses.append(obs)
            action, _ = bundle.act(obs, state, rng=None, greedy=True)
            result = env.step(action)
            state, obs = result.next_state, result.next_observation
            done = result.done
    return np.asarray(states), np.asarray(obses)


def predictor_mse_raw(bundle: PolicyBundle, states: np.ndarray,
                      obs: np.ndarray) -> float:
    """Direct score: denormalized predictor output vs true states."""
    if states.shape[0] == 0:
        raise ValueError("empty held-out set")
    pred = bundle.nets["predictor"].forward(bundle.prep_obs(obs))
    err = bundle.denormalize_states(pred) - states
    return float(np.mean(err * err))


def linear_refit_mse_raw(bundle: PolicyBundle,
                         cal: tuple[np.ndarray, np.ndarray],
                         test: tuple[np.ndarray, np.ndarray]) -> float:
    """Fit states ~ affine(embedding) on the calibration split, score on test."""
    cal_states, cal_obs = cal
    test_states, test_obs = test
    if cal_states.shape[0] == 0 or test_states.shape[0] == 0:
        raise ValueError("empty held-out set")
    emb_cal = bundle.nets["predictor"].forward(bundle.prep_obs(cal_obs))
    emb_test = bundle.nets["predictor"].forward(bundle.prep_obs(test_obs))
    design = np.hstack([emb_cal, np.ones((emb_cal.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, cal_states, rcond=None)
    pred = np.hstack([emb_test, np.ones((emb_test.shape[0], 1))]) @ coef
    err = pred - test_states
    return float(np.mean(err * err))


def heldout_mse(env, bundle: PolicyBundle, seed: int, episodes: int = 20,
                calibration_frac: float = 0.5) -> float:
    """One seed's held-out MSE; refits iff the bundle is the e2e baseline."""
    if "predictor" not in bundle.nets:
        raise ValueError(f"mode {bundle.mode!r} has no state predictor to score")
    seed_base = HELDOUT_SEED_BASE + seed * 100_003
    cal_n = max(1, int(np.ceil(episodes * calibration_frac)))
    if cal_n >= episodes:
        raise ValueError("calibration split leaves no test episodes")
    cal = collect_heldout(env, bundle, cal_n, seed_base)
    test = collect_heldout(env, bundle, episodes - cal_n, seed_base + cal_n)
    if bundle.mode == "e2e":
        return linear_refit_mse_raw(bundle, cal, test)
    return predictor_mse_raw(bundle, test[0], test[1])


@dataclass
class MseRow:
    env: str
    mode: str
    k: int
    seeds: list[int]
    per_seed: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_seed))

    @property
    def std(self) -> float:
        return float(np.std(self.per_seed))


def mse_table_from_manifests(paths: list[str],
                             episodes: int = 20) -> list[MseRow]:
    """One table row per manifest (env x mode), pooled across its seeds."""
    from ..envs import make_env

    rows = []
    for path in paths:
        manifest = read_manifest(path)
        assert_heldout_disjoint(manifest)
        if manifest["train"]["mode"] == "true_state":
            continue                      # nothing to score
        cfg = build_configs(manifest["flat_config"])
        per_seed, seeds = [], []
        for run in manifest["runs"]:
            if run["status"] != "ok":
                continue
            bundle = load_bundle(run["bundle_path"])
            env = make_env(cfg.env)
            per_seed.append(heldout_mse(env, bundle, run["seed"], episodes))
            seeds.append(run["seed"])
        if not per_seed:
            raise ValueError(f"{path}: no completed runs to score")
        rows.append(MseRow(cfg.env.name, cfg.train.mode, cfg.train.k,
                           seeds, per_seed))
    return rows


MSE_SCHEMA_LINE = "# mse-schema 1"


def write_mse_csv(path: str, rows: list[MseRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MSE_SCHEMA_LINE + "\n")
        fh.write("env,mode,K,num_seeds,mse_mean,mse_std\n")
        for row in rows:
            fh.write(f"{row.env},{row.mode},{row.k},{len(row.seeds)},"
                     f"{row.mean!r},{row.std!r}\n")
