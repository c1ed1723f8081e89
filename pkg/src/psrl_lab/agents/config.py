"""Training configuration: mode, loss weights, and loop hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field

MODES = ("true_state", "e2e", "psrl", "repr_first", "policy_first", "asym")
ALGOS = ("dqn", "ppo")


@dataclass
class TrainConfig:
    """One training run, fully determined together with the env config + seed.

    `mode` picks the wiring (who sees the true state, which losses apply);
    `algo` picks the RL lane. DQN is critic-only, so the actor and entropy
    weights are forced to zero there.
    """

    mode: str = "psrl"
    algo: str = "dqn"
    k: int = 0                       # latent embedding width of the h network
    beta: float = 1.0                # supervised loss weight
    gamma: float = 0.99
    eta: float = 0.2                 # PPO clip radius
    alpha1: float = 1.0              # actor loss weight (PPO)
    alpha2: float = 0.01             # entropy bonus weight (PPO)
    env_steps: int = 50_000
    batch_size: int = 64
    episodes_per_update: int = 1     # on-policy rollout size N
    update_every: int = 4            # DQN: env steps between gradient updates
    target_sync: int = 1000          # DQN: env steps between target copies
    buffer_capacity: int = 50_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.1      # fraction of env_steps to anneal over
    ppo_epochs: int = 10             # passes over each on-policy rollout
    lr: float = 1e-3
    log_std_init: float = -0.5       # Gaussian policy initial log stddev
    hidden: tuple[int, ...] = (64, 64)
    hidden_act: str = "relu"         # tanh gives the finite-difference audit
                                     # a kink-free surface
    pretrain_frac: float = 0.25      # phase-1 share for the staged ablations
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {ALGOS}")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.beta < 0.0:
            raise ValueError("beta must be >= 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("alpha1 and alpha2 must be >= 0")
        if self.env_steps < 0:
            raise ValueError("env_steps must be >= 0")
        if min(self.batch_size, self.episodes_per_update, self.update_every,
               self.target_sync, self.buffer_capacity, self.ppo_epochs) < 1:
            raise ValueError("loop cadence fields must all be >= 1")
        if not 0.0 <= self.pretrain_frac < 1.0:
            raise ValueError("pretrain_frac must lie in [0, 1)")
        if not 0.0 < self.eps_decay_frac <= 1.0:
            raise ValueError("eps_decay_frac must lie in (0, 1]")
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")
        if self.algo == "dqn":
            # critic-only lane: no actor, no entropy bonus
            self.alpha1 = 0.0
            self.alpha2 = 0.0
            if self.mode == "asym":
                raise ValueError(
                    "asym requires algo='ppo': a DQN's acting policy IS its "
                    "critic, so a true-state critic would leak state into "
                    "execution")
        elif self.alpha1 <= 0.0:
            raise ValueError("ppo requires alpha1 > 0")
        if self.mode == "policy_first" and self.k != 0:
            raise ValueError(
                "policy_first pretrains the policy on the n-dim true state, "
                "so the composed policy admits no latent input; use k=0")
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden must name at least one positive width")
        if self.hidden_act not in ("relu", "tanh"):
            raise ValueError("hidden_act must be 'relu' or 'tanh'")


@dataclass
class ExperimentConfig:
    """A sweep: one env config + one train config, repeated across seeds."""

    seeds: list[int] = field(default_factory=lambda: [0])
    eval_cadence: int = 10       # training episodes between evaluation points
    eval_episodes: int = 5
    out_dir: str = "results"
    label: str = "run"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.eval_cadence < 1 or self.eval_episodes < 1:
            raise ValueError("evaluation cadence and episode count must be >= 1")
