"""Finite-difference audit of every loss surface against the analytic tape.

Each scenario builds a small synthetic batch and bundle, then runs the
actual training losses (which accumulate gradients as a side effect) under
`grad_check`. Batches include terminal flags, stale behavior log-probs
(so the clip branches are really exercised), and both action kinds.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from ..nn.gradcheck import GradCheckReport, grad_check
from .buffer import Batch
from .bundle import make_bundle
from .config import TrainConfig
from .losses import ppo_bootstrap, psrl_loss, state_loss


class _FakeEnv:
    """Just enough env surface for make_bundle."""

    def __init__(self, state_dim, obs_shape, action_space, image=False):
        self.state_dim = state_dim
        self.observation_shape = obs_shape
        self.action_space = action_space
        self.state_bounds = (-np.ones(state_dim) * 2.0, np.ones(state_dim) * 2.0)
        self.config = SimpleNamespace(
            obs_mode="raster" if image else "projection", frame_stack=1)


class _DiscreteSpace(SimpleNamespace):
    pass


def _toy_setup(seed: int, algo: str, mode: str, k: int, discrete: bool,
               beta: float, alpha2: float = 0.01, image: bool = False):
    rng = np.random.default_rng(seed * 7919 + 13)
    n, batch = 3, 5
    if image:
        obs_shape: tuple = (16, 16)
    else:
        obs_shape = (6,)
    if discrete:
        space = _DiscreteSpace(n=3)
        actions = rng.integers(3, size=batch)
    else:
        from ..envs import Box
        space = Box(np.array([-2.0]), np.array([2.0]))
        actions = rng.uniform(-2.0, 2.0, size=(batch, 1))
    env = _FakeEnv(n, obs_shape, space, image=image)
    # tanh hidden units keep the audited surface kink-free: a ReLU whose
    # pre-activation sits within eps of zero makes central differences
    # straddle the kink and report a bogus mismatch
    config = TrainConfig(mode=mode, algo=algo, k=k, beta=beta,
                         alpha2=alpha2, hidden=(8, 8), seed=seed,
                         env_steps=0, hidden_act="tanh")
    bundle = make_bundle(env, config)

    states = rng.normal(size=(batch, n))
    next_states = rng.normal(size=(batch, n))
    obs = rng.normal(size=(batch,) + obs_shape)
    next_obs = rng.normal(size=(batch,) + obs_shape)
    done = rng.random(batch) < 0.3
    log_probs = None
    if algo == "ppo":
        # behavior log-probs from a stale snapshot: offset the current ones
        # so the ratios land inside AND on both clipped sides of the band,
        # but never within finite-difference reach of the kink at 1 +/- eta
        fresh = np.array([
            bundle.act(obs[i], states[i], np.random.default_rng(0))[1]
            for i in range(batch)])
        log_probs = fresh + rng.choice([-0.6, -0.3, 0.0, 0.3, 0.6],
                                       size=batch)
    batch_data = Batch(states=states, observations=obs, actions=actions,
                       rewards=rng.normal(size=batch),
                       next_states=next_states, next_observations=next_obs,
                       done=done, truncated=np.zeros(batch, dtype=bool),
                       log_probs=log_probs)
    return bundle, config, batch_data


@dataclass
class AuditEntry:
    scenario: str
    seed: int
    report: GradCheckReport


@dataclass
class AuditResult:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.report.passed for e in self.entries)

    @property
    def max_rel_error(self) -> float:
        return max(e.report.max_rel_error for e in self.entries)

    def summary_lines(self) -> list:
        lines = []
        by_name: dict[str, list[AuditEntry]] = {}
        for e in self.entries:
            by_name.setdefault(e.scenario, []).append(e)
        for name, group in by_name.items():
            worst = max(g.report.max_rel_error for g in group)
            ok = all(g.report.passed for g in group)
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: "
                         f"max rel error {worst:.3e} over {len(group)} seeds")
        return lines


def _scenarios():
    return [
        ("critic", dict(algo="dqn", mode="psrl", k=2, discrete=True,
                        beta=0.0)),
        ("actor_clipped", dict(algo="ppo", mode="psrl", k=2, discrete=True,
                               beta=0.0, alpha2=0.0)),
        ("entropy", dict(algo="ppo", mode="psrl", k=0, discrete=True,
                         beta=0.0, alpha2=0.3)),
        ("gaussian_actor", dict(algo="ppo", mode="psrl", k=2, discrete=False,
                                beta=0.0)),
        ("supervised", dict(algo="dqn", mode="psrl", k=0, discrete=True,
                            beta=1.0)),
        ("composite_psrl", dict(algo="ppo", mode="psrl", k=2, discrete=True,
                                beta=1.3)),
        ("asym_critic", dict(algo="ppo", mode="asym", k=2, discrete=True,
                             beta=0.7)),
    ]


def audit_gradients(seeds: int = 10, tolerance: float = 1e-4,
                    include_conv: bool = True) -> AuditResult:
    entries = []
    for name, kw in _scenarios():
        for seed in range(seeds):
            bundle, config, batch = _toy_setup(seed, **kw)
            if name == "supervised":
                networks = [bundle.nets["predictor"]]

                def closure(b=batch, bd=bundle):
                    return state_loss(b, bd)
            else:
                networks = [net for _, net in bundle.trainable()]
                # semi-gradient losses: bootstrap targets and advantages are
                # stop-gradient constants, so snapshot them before perturbing
                frozen = ppo_bootstrap(batch, bundle, config) \
                    if config.algo == "ppo" else None

                def closure(b=batch, bd=bundle, c=config, fz=frozen):
                    return psrl_loss(b, bd, c, frozen_targets=fz).composite
            report = grad_check(networks, closure, tolerance)
            entries.append(AuditEntry(name, seed, report))
    if include_conv:
        for seed in range(min(2, seeds)):
            bundle, config, batch = _toy_setup(
                seed, algo="dqn", mode="psrl", k=0, discrete=True, beta=0.8,
                image=True)
            networks = [net for _, net in bundle.trainable()]

            def closure(b=batch, bd=bundle, c=config):
                return psrl_loss(b, bd, c).composite
            report = grad_check(networks, closure, tolerance)
            entries.append(AuditEntry("conv_composite", seed, report))
    return AuditResult(entries)
