"""The composed policy: state predictor, latent head, policy, critic.

Executing the policy is pi(o) = pi_tilde(g(o), h(o)) — the true state never
appears on the acting path except in the true-state skyline mode. The
asymmetric variant feeds the critic the true state during training only;
a read counter on that path lets tests assert execution never touches it.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..nn.engine import (Conv2d, Dense, Flatten, Layer, MaxPool2d, Network,
                         Param, ReLU, Tanh)
from ..nn.losses import gaussian_log_prob, log_softmax, softmax
from .config import TrainConfig

BUNDLE_FORMAT_VERSION = 1


class _ParamBank(Layer):
    """A bare trainable vector (the Gaussian policy's state-free log-std)."""

    def __init__(self, value: np.ndarray):
        self.param = Param(value)

    def params(self) -> list[Param]:
        return [self.param]


def _mlp_layers(dims: list[int], rng, out_tanh: bool,
                act=ReLU) -> list[Layer]:
    layers: list[Layer] = []
    for i in range(len(dims) - 1):
        layers.append(Dense(dims[i], dims[i + 1], rng))
        if i < len(dims) - 2:
            layers.append(act())
    if out_tanh:
        layers.append(Tanh())
    return layers


def _conv_trunk_layers(in_ch: int, side: int, out_dim: int, rng,
                       out_tanh: bool, act=ReLU) -> list[Layer]:
    # two stride-2 convs shrink 40 -> 18 -> 7 before the dense head
    c1, c2 = 8, 16
    layers: list[Layer] = [Conv2d(in_ch, c1, kernel=5, stride=2, rng=rng), act(),
                           Conv2d(c1, c2, kernel=5, stride=2, rng=rng), act(),
                           Flatten()]
    s = (side - 5) // 2 + 1
    s = (s - 5) // 2 + 1
    layers.append(Dense(c2 * s * s, 64, rng))
    layers.append(act())
    layers.append(Dense(64, out_dim, rng))
    if out_tanh:
        layers.append(Tanh())
    return layers


@dataclass
class ActionSpec:
    kind: str                     # "discrete" | "box"
    n: int = 0                    # action count (discrete)
    low: np.ndarray | None = None
    high: np.ndarray | None = None

    @property
    def dims(self) -> int:
        return self.n if self.kind == "discrete" else self.low.size


@dataclass
class PolicyBundle:
    mode: str
    algo: str
    k: int
    state_dim: int
    obs_shape: tuple[int, ...]
    action: ActionSpec
    nets: dict[str, Network]
    targets: dict[str, Network] = field(default_factory=dict)
    # state normalization: normalized = (s - offset) / scale, in [-1, 1]
    state_offset: np.ndarray | None = None
    state_scale: np.ndarray | None = None
    # observation normalization (identity lifts only), per stacked obs vector
    obs_offset: np.ndarray | None = None
    obs_scale: np.ndarray | None = None
    state_access_count: int = 0

    # -- input plumbing ------------------------------------------------------

    @property
    def image_obs(self) -> bool:
        return len(self.obs_shape) >= 2

    @property
    def feature_dim(self) -> int:
        return self.state_dim + self.k

    def prep_obs(self, obs: np.ndarray) -> np.ndarray:
        """Batch observations into network input layout."""
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[1:] != tuple(self.obs_shape):
            raise ValueError(
                f"observation batch {obs.shape} does not match {self.obs_shape}")
        if self.obs_offset is not None:
            obs = (obs - self.obs_offset) / self.obs_scale
        if self.image_obs and obs.ndim == 3:
            obs = obs[:, None, :, :]      # single frame -> one channel
        return obs

    def normalize_states(self, states: np.ndarray) -> np.ndarray:
        return (np.asarray(states, dtype=np.float64) - self.state_offset) \
            / self.state_scale

    def denormalize_states(self, normalized: np.ndarray) -> np.ndarray:
        return normalized * self.state_scale + self.state_offset

    # -- composition ---------------------------------------------------------

    def obs_features(self, obs_batch: np.ndarray,
                     nets: dict[str, Network] | None = None) -> np.ndarray:
        """Forward the predictor (and latent head) and concatenate."""
        nets = self.nets if nets is None else nets
        x = self.prep_obs(obs_batch)
        s_hat = nets["predictor"].forward(x)
        if self.k == 0:
            return s_hat
        z = nets["latent"].forward(x)
        return np.concatenate([s_hat, z], axis=1)

    def backward_features(self, grad: np.ndarray,
                          train: frozenset[str] | None = None) -> None:
        """Route a feature gradient back into predictor / latent heads."""
        n = self.state_dim
        if train is None or "predictor" in train:
            self.nets["predictor"].backward(grad[:, :n])
        if self.k > 0 and (train is None or "latent" in train):
            self.nets["latent"].backward(grad[:, n:])

    def state_features(self, states: np.ndarray) -> np.ndarray:
        """Normalized true state as the input vector (counted access)."""
        self.state_access_count += 1
        return self.normalize_states(states)

    def q_values(self, obs_batch: np.ndarray) -> np.ndarray:
        if self.mode == "true_state":
            raise ValueError("true_state mode selects actions from states")
        return self.nets["policy"].forward(self.obs_features(obs_batch))

    # -- acting ---------------------------------------------------------------

    def act(self, obs: np.ndarray, state: np.ndarray,
            rng: np.random.Generator | None, epsilon: float = 0.0,
            greedy: bool = False, from_state: bool = False):
        """One action (plus its log-prob for stochastic policies).

        `from_state` routes the policy input through the true state — used by
        the true-state skyline and the policy-first pretraining phase.
        """
        if from_state:
            f = self.state_features(np.asarray(state)[None, :])
        else:
            f = self.obs_features(np.asarray(obs)[None, :])
        out = self.nets["policy"].forward(f)[0]
        if self.algo == "dqn":
            if not greedy and rng.random() < epsilon:
                return int(rng.integers(self.action.n)), None
            return int(np.argmax(out)), None
        if self.action.kind == "discrete":
            logp_all = log_softmax(out[None, :])[0]
            if greedy:
                a = int(np.argmax(out))
            else:
                a = int(rng.choice(self.action.n, p=softmax(out[None, :])[0]))
            return a, float(logp_all[a])
        mean = out * self.action.high
        log_std = self.nets["log_std"].layers[0].param.value
        if greedy:
            a = mean.copy()
        else:
            a = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        a = np.clip(a, self.action.low, self.action.high)
        logp = float(gaussian_log_prob(a[None, :], mean[None, :], log_std)[0])
        return a, logp

    # -- bookkeeping -----------------------------------------------------------

    def trainable(self, names=None) -> list[tuple[str, Network]]:
        items = sorted(self.nets.items())
        if names is None:
            return items
        return [(name, net) for name, net in items if name in names]

    def sync_targets(self) -> None:
        for name, net in self.targets.items():
            net.copy_params_from(self.nets[name])

    def checksum(self) -> str:
        h = hashlib.sha256()
        for name, net in sorted(self.nets.items()):
            h.update(name.encode())
            for p in net.params():
                h.update(p.value.tobytes())
        return h.hexdigest()

    def param_count(self) -> int:
        return sum(net.num_params() for _, net in sorted(self.nets.items()))


# -- construction -------------------------------------------------------------


def _obs_facets(env) -> tuple[str, int]:
    cfg = getattr(env, "config", None)
    if cfg is None:
        return "identity", 1
    return cfg.obs_mode, cfg.frame_stack


def _action_spec(env) -> ActionSpec:
    space = env.action_space
    if hasattr(space, "n"):
        return ActionSpec("discrete", n=space.n)
    return ActionSpec("box", low=space.low.copy(), high=space.high.copy())


def make_bundle(env, config: TrainConfig) -> PolicyBundle:
    """Build all networks for one run; init order is fixed across modes so
    that architecturally identical modes start from identical draws."""
    rng = np.random.default_rng(config.seed)
    n = env.state_dim
    obs_shape = tuple(env.observation_shape)
    action = _action_spec(env)
    obs_mode, stack = _obs_facets(env)
    low, high = env.state_bounds
    state_offset = (np.asarray(low) + np.asarray(high)) / 2.0
    state_scale = (np.asarray(high) - np.asarray(low)) / 2.0

    hidden = list(config.hidden)
    act = Tanh if config.hidden_act == "tanh" else ReLU
    image = len(obs_shape) >= 2
    if image:
        in_ch = obs_shape[0] if len(obs_shape) == 3 else 1
        side = obs_shape[-1]

        def trunk(out_dim, out_tanh):
            return Network(_conv_trunk_layers(in_ch, side, out_dim, rng,
                                              out_tanh, act))
    else:
        obs_dim = obs_shape[0]

        def trunk(out_dim, out_tanh):
            return Network(_mlp_layers([obs_dim] + hidden + [out_dim], rng,
                                       out_tanh, act))

    nets: dict[str, Network] = {}
    if config.mode != "true_state":
        nets["predictor"] = trunk(n, out_tanh=True)
        if config.k > 0:
            nets["latent"] = trunk(config.k, out_tanh=True)
    feat = n + (config.k if config.mode != "true_state" else 0)

    head_out = action.n if (config.algo == "dqn" or action.kind == "discrete") \
        else action.dims
    head_tanh = config.algo == "ppo" and action.kind == "box"
    nets["policy"] = Network(_mlp_layers([feat] + hidden + [head_out], rng,
                                         head_tanh, act))
    if config.algo == "ppo":
        critic_in = n if config.mode in ("asym", "true_state") else feat
        nets["critic"] = Network(_mlp_layers([critic_in] + hidden + [1], rng,
                                             out_tanh=False, act=act))
        if action.kind == "box":
            nets["log_std"] = Network([_ParamBank(
                np.full(action.dims, config.log_std_init))])

    targets: dict[str, Network] = {}
    if config.algo == "dqn":
        # the target is a frozen copy of the full observation -> Q composition
        if config.mode != "true_state":
            targets["predictor"] = trunk_copy(nets["predictor"])
            if config.k > 0:
                targets["latent"] = trunk_copy(nets["latent"])
        targets["policy"] = trunk_copy(nets["policy"])

    obs_offset = obs_scale = None
    if obs_mode == "identity" and not image:
        obs_offset = np.tile(state_offset, stack)
        obs_scale = np.tile(state_scale, stack)

    bundle = PolicyBundle(mode=config.mode, algo=config.algo, k=config.k,
                          state_dim=n, obs_shape=obs_shape, action=action,
                          nets=nets, targets=targets,
                          state_offset=state_offset, state_scale=state_scale,
                          obs_offset=obs_offset, obs_scale=obs_scale)
    bundle.sync_targets()
    return bundle


def trunk_copy(net: Network) -> Network:
    """A congruent network (fresh layers, same shapes) holding copied params."""
    layers: list[Layer] = []
    for layer in net.layers:
        if isinstance(layer, Dense):
            layers.append(Dense(layer.in_dim, layer.out_dim))
        elif isinstance(layer, Conv2d):
            layers.append(Conv2d(layer.in_ch, layer.out_ch, layer.kernel,
                                 layer.stride))
        elif isinstance(layer, MaxPool2d):
            layers.append(MaxPool2d(layer.k))
        elif isinstance(layer, ReLU):
            layers.append(ReLU())
        elif isinstance(layer, Tanh):
            layers.append(Tanh())
        elif isinstance(layer, Flatten):
            layers.append(Flatten())
        elif isinstance(layer, _ParamBank):
            layers.append(_ParamBank(layer.param.value.copy()))
        else:
            raise ValueError(f"cannot copy layer {layer!r}")
    twin = Network(layers)
    twin.copy_params_from(net)
    return twin


# -- persistence ---------------------------------------------------------------


def _layer_spec(layer: Layer) -> dict:
    if isinstance(layer, Dense):
        return {"kind": "Dense", "in": layer.in_dim, "out": layer.out_dim}
    if isinstance(layer, Conv2d):
        return {"kind": "Conv2d", "in_ch": layer.in_ch, "out_ch": layer.out_ch,
                "kernel": layer.kernel, "stride": layer.stride}
    if isinstance(layer, MaxPool2d):
        return {"kind": "MaxPool2d", "k": layer.k}
    if isinstance(layer, ReLU):
        return {"kind": "ReLU"}
    if isinstance(layer, Tanh):
        return {"kind": "Tanh"}
    if isinstance(layer, Flatten):
        return {"kind": "Flatten"}
    if isinstance(layer, _ParamBank):
        return {"kind": "ParamBank", "dim": int(layer.param.value.size)}
    raise ValueError(f"cannot serialize layer {layer!r}")


def _layer_from_spec(spec: dict) -> Layer:
    kind = spec["kind"]
    if kind == "Dense":
        return Dense(spec["in"], spec["out"])
    if kind == "Conv2d":
        return Conv2d(spec["in_ch"], spec["out_ch"], spec["kernel"],
                      spec["stride"])
    if kind == "MaxPool2d":
        return MaxPool2d(spec["k"])
    if kind == "ReLU":
        return ReLU()
    if kind == "Tanh":
        return Tanh()
    if kind == "Flatten":
        return Flatten()
    if kind == "ParamBank":
        return _ParamBank(np.zeros(spec["dim"]))
    raise ValueError(f"unknown layer kind {kind!r}")


def _arr(a: np.ndarray | None):
    return None if a is None else np.asarray(a).tolist()


def save_bundle(bundle: PolicyBundle, path: str) -> None:
    """Single-file format: length-prefixed JSON manifest + raw float64 params.

    Raw bytes (not an archive format) keep the output free of timestamps, so
    identical bundles serialize to identical files.
    """
    manifest = {
        "version": BUNDLE_FORMAT_VERSION,
        "mode": bundle.mode,
        "algo": bundle.algo,
        "k": bundle.k,
        "state_dim": bundle.state_dim,
        "obs_shape": list(bundle.obs_shape),
        "action": {"kind": bundle.action.kind, "n": bundle.action.n,
                   "low": _arr(bundle.action.low),
                   "high": _arr(bundle.action.high)},
        "state_offset": _arr(bundle.state_offset),
        "state_scale": _arr(bundle.state_scale),
        "obs_offset": _arr(bundle.obs_offset),
        "obs_scale": _arr(bundle.obs_scale),
        "nets": {name: [_layer_spec(l) for l in net.layers]
                 for name, net in sorted(bundle.nets.items())},
        "targets": {name: [_layer_spec(l) for l in net.layers]
                    for name, net in sorted(bundle.targets.items())},
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">Q", len(blob)))
        fh.write(blob)
        for _, net in sorted(bundle.nets.items()):
            for p in net.params():
                fh.write(p.value.tobytes())
        for _, net in sorted(bundle.targets.items()):
            for p in net.params():
                fh.write(p.value.tobytes())


def load_bundle(path: str) -> PolicyBundle:
    with open(path, "rb") as fh:
        (length,) = struct.unpack(">Q", fh.read(8))
        manifest = json.loads(fh.read(length).decode("utf-8"))
        if manifest["version"] != BUNDLE_FORMAT_VERSION:
            raise ValueError(f"unsupported bundle version {manifest['version']}")

        def load_net(specs) -> Network:
            net = Network([_layer_from_spec(s) for s in specs])
            for p in net.params():
                raw = fh.read(p.value.nbytes)
                p.value[...] = np.frombuffer(raw).reshape(p.value.shape)
            return net

        nets = {name: load_net(specs)
                for name, specs in sorted(manifest["nets"].items())}
        targets = {name: load_net(specs)
                   for name, specs in sorted(manifest["targets"].items())}

    def arr(x):
        return None if x is None else np.asarray(x, dtype=np.float64)

    action = ActionSpec(manifest["action"]["kind"], manifest["action"]["n"],
                        arr(manifest["action"]["low"]),
                        arr(manifest["action"]["high"]))
    return PolicyBundle(mode=manifest["mode"], algo=manifest["algo"],
                        k=manifest["k"], state_dim=manifest["state_dim"],
                        obs_shape=tuple(manifest["obs_shape"]), action=action,
                        nets=nets, targets=targets,
                        state_offset=arr(manifest["state_offset"]),
                        state_scale=arr(manifest["state_scale"]),
                        obs_offset=arr(manifest["obs_offset"]),
                        obs_scale=arr(manifest["obs_scale"]))
