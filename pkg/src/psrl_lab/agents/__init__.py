"""Learning machinery: losses, replay, policy bundles, the training loop."""

from .audit import AuditResult, audit_gradients
from .buffer import Batch, ReplayBuffer
from .bundle import (ActionSpec, PolicyBundle, load_bundle, make_bundle,
                     save_bundle)
from .config import ALGOS, MODES, ExperimentConfig, TrainConfig
from .losses import (LossReport, advantage, critic_loss_dqn, dqn_target,
                     ppo_actor_loss, psrl_loss, rl_loss, state_loss,
                     supervised_only_loss)
from .train import (Phase, PhaseController, RunRecord, TrainingDiverged,
                    ablation_schedule, epsilon_at, evaluate, train)

__all__ = [
    "ALGOS", "MODES", "ActionSpec", "AuditResult", "Batch", "ExperimentConfig",
    "LossReport", "Phase", "PhaseController", "PolicyBundle", "ReplayBuffer",
    "RunRecord", "TrainConfig", "TrainingDiverged", "ablation_schedule",
    "advantage", "audit_gradients", "critic_loss_dqn", "dqn_target",
    "epsilon_at", "evaluate", "load_bundle", "make_bundle", "ppo_actor_loss",
    "psrl_loss", "rl_loss", "save_bundle", "state_loss",
    "supervised_only_loss", "train",
]
