"""The training loop: collection, updates, target syncs, staged ablations.

A run is single-threaded and fully determined by (env config, train config,
seed): network init, action sampling, replay sampling, and env resets all
draw from generators derived from the one seed. Evaluation episodes use a
reserved seed range (>= 2^31) disjoint from training resets (< 2^31).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn.optim import OptimizerState, optimizer_step
from .buffer import ReplayBuffer
from .bundle import PolicyBundle, make_bundle
from .config import TrainConfig
from .losses import (LossReport, ppo_bootstrap, psrl_loss, rl_loss,
                     supervised_only_loss)

EVAL_SEED_BASE = 2 ** 31


class TrainingDiverged(RuntimeError):
    """A non-finite loss aborted the run; carries the partial artifacts."""

    def __init__(self, step: int, report: LossReport, bundle: PolicyBundle,
                 records: list):
        super().__init__(f"non-finite loss at env step {step}: {report}")
        self.step = step
        self.report = report
        self.bundle = bundle
        self.records = records


@dataclass
class RunRecord:
    kind: str                 # "train" | "eval"
    episode: int
    env_step: int
    episode_return: float | None
    eval_return_mean: float | None
    epsilon: float
    state_mse_normalized: float | None
    state_mse_raw: float | None


@dataclass(frozen=True)
class Phase:
    name: str
    train: frozenset
    supervised: bool
    rl: bool
    act_source: str           # "obs" | "state"


@dataclass
class PhaseController:
    phases: list              # [(start_step, Phase)], starts non-decreasing

    def phase_at(self, step: int) -> Phase:
        current = self.phases[0][1]
        for start, phase in self.phases:
            if step >= start:
                current = phase
        return current

    @property
    def boundary_step(self) -> int | None:
        return self.phases[1][0] if len(self.phases) > 1 else None


def _net_names(config: TrainConfig) -> frozenset:
    names = {"policy"}
    if config.mode != "true_state":
        names.add("predictor")
        if config.k > 0:
            names.add("latent")
    if config.algo == "ppo":
        names.add("critic")
        names.add("log_std")     # present only for continuous actions
    return frozenset(names)


def ablation_schedule(config: TrainConfig) -> PhaseController:
    """Map a mode onto training phases: who trains, on which loss, acting
    from observations or (pretraining only) from the true state."""
    names = _net_names(config)
    if config.mode == "true_state":
        return PhaseController([(0, Phase("rl", names, False, True, "state"))])
    if config.mode == "e2e":
        return PhaseController([(0, Phase("rl", names, False, True, "obs"))])
    if config.mode in ("psrl", "asym"):
        return PhaseController([(0, Phase("joint", names, True, True, "obs"))])
    boundary = int(config.pretrain_frac * config.env_steps)
    if config.mode == "repr_first":
        return PhaseController([
            (0, Phase("pretrain_repr", frozenset({"predictor"}),
                      True, False, "obs")),
            (boundary, Phase("rl_frozen_repr", names - {"predictor"},
                             False, True, "obs")),
        ])
    # policy_first: learn pi on true state, then fit g with pi frozen;
    # execution always runs the composed pi(g(o))
    return PhaseController([
        (0, Phase("pretrain_policy", names - {"predictor"},
                  False, True, "state")),
        (boundary, Phase("fit_repr", frozenset({"predictor"}),
                         True, False, "obs")),
    ])


def epsilon_at(step: int, config: TrainConfig) -> float:
    if config.algo != "dqn":
        return 0.0
    horizon = max(1, int(config.eps_decay_frac * config.env_steps))
    frac = min(1.0, step / horizon)
    return config.eps_start + frac * (config.eps_end - config.eps_start)


def _phase_loss(batch, bundle, config, phase, frozen=None) -> LossReport:
    if phase.supervised and not phase.rl:
        return supervised_only_loss(batch, bundle, train=phase.train)
    if phase.rl and not phase.supervised:
        return rl_loss(batch, bundle, config, train=phase.train,
                       source=phase.act_source, frozen_targets=frozen)
    return psrl_loss(batch, bundle, config, train=phase.train,
                     source=phase.act_source, frozen_targets=frozen)


def _assert_frozen_zero(bundle: PolicyBundle, train: frozenset) -> None:
    for name, net in bundle.nets.items():
        if name in train:
            continue
        for p in net.params():
            assert not p.grad.any(), \
                f"gradient leaked into frozen network {name!r}"


def _update(batch, bundle, config, phase, optimizers, frozen=None) -> LossReport:
    report = _phase_loss(batch, bundle, config, phase, frozen)
    _assert_frozen_zero(bundle, phase.train)
    for name, net in bundle.trainable(phase.train):
        optimizer_step(optimizers[name], net)
    return report


def evaluate(env, bundle: PolicyBundle, episodes: int, seed_base: int
             ) -> tuple[float, float | None, float | None]:
    """Greedy rollouts on reserved seeds; returns (mean return, predictor
    MSE normalized, MSE raw units) over the visited (o, s) pairs."""
    from_state = bundle.mode == "true_state"
    returns = []
    states, obses = [], []
    for i in range(episodes):
        state, obs = env.reset(seed_base + i)
        total = 0.0
        done = False
        while not done:
            states.append(state)
            obses.append(obs)
            action, _ = bundle.act(obs, state, rng=None, greedy=True,
                                   from_state=from_state)
            result = env.step(action)
            total += result.reward
            state, obs = result.next_state, result.next_observation
            done = result.done
        returns.append(total)
    mean_return = float(np.mean(returns))
    if "predictor" not in bundle.nets:
        return mean_return, None, None
    s = np.asarray(states)
    target = bundle.normalize_states(s)
    pred = bundle.nets["predictor"].forward(bundle.prep_obs(np.asarray(obses)))
    err = pred - target
    mse_norm = float(np.mean(err * err))
    err_raw = bundle.denormalize_states(pred) - s
    mse_raw = float(np.mean(err_raw * err_raw))
    return mean_return, mse_norm, mse_raw


def _eval_twin(env):
    config = getattr(env, "config", None)
    if config is None:
        return None
    from ..envs import make_env
    return make_env(config)


def train(env, config: TrainConfig, *, bundle: PolicyBundle | None = None,
          eval_env=None, eval_cadence: int = 10, eval_episodes: int = 5,
          on_update=None) -> tuple[PolicyBundle, list[RunRecord]]:
    """Run one seed to its step budget; returns the bundle and the record
    stream (one row per training episode, one per evaluation point)."""
    rng = np.random.default_rng(config.seed)
    if bundle is None:
        bundle = make_bundle(env, config)
    if eval_env is None:
        eval_env = _eval_twin(env)
    controller = ablation_schedule(config)
    optimizers = {name: OptimizerState(net, "adam", config.lr)
                  for name, net in bundle.nets.items()}

    on_policy = config.algo == "ppo"
    capacity = config.buffer_capacity
    if on_policy:
        capacity = config.episodes_per_update * _cap_of(env) + 1
    action_shape = () if bundle.action.kind == "discrete" \
        else (bundle.action.dims,)
    buffer = ReplayBuffer(capacity, env.state_dim, tuple(env.observation_shape),
                          action_shape, store_log_probs=on_policy)

    records: list[RunRecord] = []
    step = 0
    episode = 0
    eval_seed = EVAL_SEED_BASE + config.seed * 1009

    def maybe_eval():
        if eval_env is None or episode % eval_cadence != 0:
            return
        ret, mse_n, mse_r = evaluate(eval_env, bundle, eval_episodes, eval_seed)
        records.append(RunRecord("eval", episode, step, None, ret,
                                 epsilon_at(step, config), mse_n, mse_r))

    def run_updates(batch, n_updates):
        phase = controller.phase_at(step)
        # PPO epochs re-walk one rollout: snapshot the TD target/advantage
        # once so the ratio, not a drifting critic, does the correction
        frozen = None
        if on_policy and phase.rl:
            frozen = ppo_bootstrap(batch, bundle, config,
                                   source=phase.act_source)
        report = None
        for _ in range(n_updates):
            report = _update(batch, bundle, config, phase, optimizers, frozen)
            if not np.isfinite(report.composite):
                raise TrainingDiverged(step, report, bundle, records)
            if on_update is not None:
                on_update(step, bundle, report)
        return report

    while step < config.env_steps:
        if on_policy:
            buffer.clear()
        episodes_collected = 0
        while step < config.env_steps:
            phase = controller.phase_at(step)
            reset_seed = int(rng.integers(EVAL_SEED_BASE))
            state, obs = env.reset(reset_seed)
            total = 0.0
            done = False
            while not done and step < config.env_steps:
                eps = epsilon_at(step, config)
                action, logp = bundle.act(
                    obs, state, rng, epsilon=eps,
                    from_state=phase.act_source == "state")
                result = env.step(action)
                buffer.push(state, obs, action, result.reward,
                            result.next_state, result.next_observation,
                            result.done, result.truncated, logp)
                state, obs = result.next_state, result.next_observation
                total += result.reward
                done = result.done
                step += 1
                if not on_policy:
                    if (step % config.update_every == 0
                            and len(buffer) >= config.batch_size):
                        run_updates(buffer.sample(config.batch_size, rng), 1)
                    if config.algo == "dqn" and step % config.target_sync == 0:
                        bundle.sync_targets()
            if done:
                episode += 1
                records.append(RunRecord(
                    "train", episode, step, total, None,
                    epsilon_at(step, config), None, None))
                maybe_eval()
                episodes_collected += 1
            if not on_policy:
                continue
            if episodes_collected >= config.episodes_per_update or step >= config.env_steps:
                break
        if on_policy and len(buffer) > 0:
            run_updates(buffer.drain(), config.ppo_epochs)
    return bundle, records


def _cap_of(env) -> int:
    cap = getattr(env, "episode_cap", None)
    if cap is None:
        raise ValueError("on-policy training needs an env with an episode cap")
    return int(cap)
