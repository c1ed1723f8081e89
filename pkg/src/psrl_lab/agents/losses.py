"""RL losses (DDQN, PPO) and the supervised-composite objective.

Each loss runs its own forward pass and accumulates analytic gradients
into the bundle's parameters as a side effect (the gradient audit relies
on exactly this closure behavior). Frozen-target and bootstrap paths are
always evaluated BEFORE the differentiated path: layers cache their last
forward input, so constants must not clobber the tape afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn.losses import (categorical_log_prob, categorical_log_prob_grad,
                         gaussian_entropy_rows, gaussian_log_prob,
                         gaussian_log_prob_grads, mse, mse_grad,
                         softmax_entropy_rows, softmax_entropy_rows_grad)
from .buffer import Batch
from .bundle import PolicyBundle
from .config import TrainConfig


@dataclass
class LossReport:
    critic: float
    actor: float
    entropy: float
    state: float
    composite: float


def dqn_target(rewards, done, gamma: float, next_q_online, next_q_target):
    """Bootstrapped regression target: r + gamma * Q_target(s', a*) where
    a* maximizes the ONLINE network — the double-DQN decoupling. Terminal
    transitions contribute exactly r."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    rewards = np.atleast_1d(np.asarray(rewards, dtype=np.float64))
    done = np.atleast_1d(done).astype(bool)
    next_q_online = np.atleast_2d(np.asarray(next_q_online, dtype=np.float64))
    next_q_target = np.atleast_2d(np.asarray(next_q_target, dtype=np.float64))
    best = np.argmax(next_q_online, axis=1)
    boot = next_q_target[np.arange(len(best)), best]
    return rewards + gamma * np.where(done, 0.0, boot)


def advantage(rewards, done, gamma: float, v, v_next):
    """One-step TD advantage A = r + gamma * v(s') * (1 - done) - v(s);
    v_next is a bootstrap constant, never differentiated."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    rewards = np.asarray(rewards, dtype=np.float64)
    mask = 1.0 - np.asarray(done, dtype=np.float64)
    return rewards + gamma * np.asarray(v_next) * mask - np.asarray(v)


def ppo_actor_loss(new_log_probs, old_log_probs, advantages,
                   eta: float) -> float:
    """Clipped-surrogate loss: mean of -min(rho*A, clip(rho)*A)."""
    loss, _ = _ppo_actor_loss_grad(new_log_probs, old_log_probs, advantages,
                                   eta)
    return loss


def _ppo_actor_loss_grad(new_log_probs, old_log_probs, advantages, eta):
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    new_log_probs = np.asarray(new_log_probs, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    rho = np.exp(new_log_probs - np.asarray(old_log_probs, dtype=np.float64))
    surrogate = rho * adv
    clipped = np.clip(rho, 1.0 - eta, 1.0 + eta) * adv
    per_sample = -np.minimum(surrogate, clipped)
    # where the clipped branch is strictly smaller, rho sits outside the
    # band, so the surrogate plateaus and its slope in log-prob is zero
    active = surrogate <= clipped
    grad = np.where(active, -surrogate, 0.0) / per_sample.size
    return float(per_sample.mean()), grad


def _features(batch: Batch, bundle: PolicyBundle, which: str,
              source: str, nets=None) -> np.ndarray:
    if source == "state":
        states = batch.states if which == "cur" else batch.next_states
        return bundle.state_features(states)
    obs = batch.observations if which == "cur" else batch.next_observations
    return bundle.obs_features(obs, nets=nets)


def _default_source(bundle: PolicyBundle) -> str:
    return "state" if bundle.mode == "true_state" else "obs"


def critic_loss_dqn(batch: Batch, bundle: PolicyBundle, gamma: float,
                    train: frozenset | None = None,
                    source: str | None = None) -> float:
    """Mean squared TD error against the double-DQN target. Gradient flows
    through the online Q head and its input path; the target composition
    stays frozen."""
    if batch.size == 0:
        raise ValueError("critic_loss_dqn needs a nonempty batch")
    source = source or _default_source(bundle)
    b = batch.size

    # constant paths first: online argmax and frozen target values at s'
    f_next = _features(batch, bundle, "next", source)
    next_q_online = bundle.nets["policy"].forward(f_next)
    if source == "state":
        f_next_t = f_next
    else:
        f_next_t = _features(batch, bundle, "next", source, nets=bundle.targets)
    next_q_target = bundle.targets["policy"].forward(f_next_t)
    qbar = dqn_target(batch.rewards, batch.bootstrap_done, gamma,
                      next_q_online, next_q_target)

    # differentiated path
    f = _features(batch, bundle, "cur", source)
    q_all = bundle.nets["policy"].forward(f)
    rows = np.arange(b)
    residual = q_all[rows, batch.actions] - qbar
    loss = float(np.mean(residual * residual))

    dq = np.zeros_like(q_all)
    dq[rows, batch.actions] = 2.0 * residual / b
    df = bundle.nets["policy"].backward(dq)
    if source == "obs":
        bundle.backward_features(df, train)
    return loss


def standardize_advantages(adv: np.ndarray) -> np.ndarray:
    """Center and rescale advantages batch-wise (order-preserving).

    Keeps the actor step size invariant to the reward scale; without it,
    environments with large all-negative rewards suppress every sampled
    action early on and the policy never leaves its initialization.
    """
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_bootstrap(batch: Batch, bundle: PolicyBundle, config: TrainConfig,
                  source: str | None = None):
    """Snapshot the TD target and advantage as plain constants.

    Training recomputes these inline each update; the gradient audit needs
    them frozen so central differences see the same stop-gradient objective
    the analytic pass differentiates.
    """
    source = source or _default_source(bundle)
    critic = bundle.nets["critic"]
    asym = bundle.mode == "asym"
    if asym or source == "state":
        next_in = bundle.state_features(batch.next_states)
        cur_in = bundle.state_features(batch.states)
    else:
        next_in = bundle.obs_features(batch.next_observations)
        cur_in = bundle.obs_features(batch.observations)
    v_next = critic.forward(next_in)[:, 0]
    v = critic.forward(cur_in)[:, 0]
    mask = 1.0 - batch.bootstrap_done.astype(np.float64)
    target = batch.rewards + config.gamma * v_next * mask
    return target, standardize_advantages(target - v)


def _ppo_losses(batch: Batch, bundle: PolicyBundle, config: TrainConfig,
                train: frozenset | None, source: str,
                frozen_targets=None) -> LossReport:
    if batch.log_probs is None:
        raise ValueError("PPO update requires behavior log-probs in the batch")
    b = batch.size
    asym = bundle.mode == "asym"
    critic = bundle.nets["critic"]

    if frozen_targets is None:
        # bootstrap value at s' (constant path, evaluated before the tape)
        if asym or source == "state":
            next_in = bundle.state_features(batch.next_states)
        else:
            next_in = bundle.obs_features(batch.next_observations)
        v_next = critic.forward(next_in)[:, 0]
        mask = 1.0 - batch.bootstrap_done.astype(np.float64)
        target = batch.rewards + config.gamma * v_next * mask
    else:
        target = np.asarray(frozen_targets[0], dtype=np.float64)

    f = _features(batch, bundle, "cur", source)
    critic_in = bundle.state_features(batch.states) if asym and source == "obs" \
        else f
    v = critic.forward(critic_in)[:, 0]
    residual = target - v
    adv = standardize_advantages(residual) if frozen_targets is None \
        else np.asarray(frozen_targets[1], dtype=np.float64)
    critic_loss = float(np.mean(residual * residual))
    d_in = critic.backward((-2.0 * residual / b)[:, None])

    df = np.zeros_like(f)
    if source == "obs" and not asym:
        df += d_in

    out = bundle.nets["policy"].forward(f)
    if bundle.action.kind == "discrete":
        new_logp = categorical_log_prob(out, batch.actions)
        actor_loss, dlogp = _ppo_actor_loss_grad(new_logp, batch.log_probs,
                                                 adv, config.eta)
        entropy = float(softmax_entropy_rows(out).mean())
        dout = categorical_log_prob_grad(out, batch.actions,
                                         config.alpha1 * dlogp)
        if config.alpha2 != 0.0:
            dout += softmax_entropy_rows_grad(
                out, np.full(b, -config.alpha2 / b))
    else:
        log_std = bundle.nets["log_std"].layers[0].param
        mean = out * bundle.action.high
        new_logp = gaussian_log_prob(batch.actions, mean, log_std.value)
        actor_loss, dlogp = _ppo_actor_loss_grad(new_logp, batch.log_probs,
                                                 adv, config.eta)
        entropy = float(gaussian_entropy_rows(log_std.value))
        if train is None or "log_std" in train:
            dmean, dls = gaussian_log_prob_grads(batch.actions, mean,
                                                 log_std.value,
                                                 config.alpha1 * dlogp)
            log_std.grad += dls.sum(axis=0)
            log_std.grad += -config.alpha2          # entropy bonus term
        else:
            dmean, _ = gaussian_log_prob_grads(batch.actions, mean,
                                               log_std.value,
                                               config.alpha1 * dlogp)
        dout = dmean * bundle.action.high
    df += bundle.nets["policy"].backward(dout)
    if source == "obs":
        bundle.backward_features(df, train)

    composite = critic_loss + config.alpha1 * actor_loss \
        - config.alpha2 * entropy
    return LossReport(critic_loss, actor_loss, entropy, 0.0, composite)


def rl_loss(batch: Batch, bundle: PolicyBundle, config: TrainConfig,
            train: frozenset | None = None, source: str | None = None,
            frozen_targets=None) -> LossReport:
    """The reinforcement objective: critic-only for DQN, clipped-surrogate
    actor + TD critic + entropy bonus for PPO."""
    source = source or _default_source(bundle)
    if config.algo == "dqn":
        c = critic_loss_dqn(batch, bundle, config.gamma, train, source)
        return LossReport(c, 0.0, 0.0, 0.0, c)
    return _ppo_losses(batch, bundle, config, train, source, frozen_targets)


def state_loss(batch: Batch, bundle: PolicyBundle,
               backward_scale: float = 1.0,
               train: frozenset | None = None) -> float:
    """Supervised predictor loss: MSE between g(o) and the normalized true
    state. `backward_scale` folds the composite weight into the upstream."""
    if "predictor" not in bundle.nets:
        raise ValueError(f"mode {bundle.mode!r} has no state predictor")
    x = bundle.prep_obs(batch.observations)
    s_hat = bundle.nets["predictor"].forward(x)
    target = bundle.normalize_states(batch.states)
    loss = mse(s_hat, target)
    if backward_scale != 0.0 and (train is None or "predictor" in train):
        bundle.nets["predictor"].backward(
            backward_scale * mse_grad(s_hat, target))
    return loss


def psrl_loss(batch: Batch, bundle: PolicyBundle, config: TrainConfig,
              train: frozenset | None = None, source: str | None = None,
              frozen_targets=None) -> LossReport:
    """Composite objective: RL loss plus beta-weighted supervised loss.

    beta == 0 skips the supervised pass entirely, so updates are arithmetic-
    identical to the end-to-end baseline of the same architecture.
    """
    report = rl_loss(batch, bundle, config, train, source, frozen_targets)
    supervised_modes = bundle.mode not in ("true_state", "e2e")
    if supervised_modes and config.beta != 0.0:
        s = state_loss(batch, bundle, backward_scale=config.beta, train=train)
        return LossReport(report.critic, report.actor, report.entropy, s,
                          report.composite + config.beta * s)
    return report


def supervised_only_loss(batch: Batch, bundle: PolicyBundle,
                         train: frozenset | None = None) -> LossReport:
    """Phase objective for staged ablations: predictor MSE alone."""
    s = state_loss(batch, bundle, backward_scale=1.0, train=train)
    return LossReport(0.0, 0.0, 0.0, s, s)
