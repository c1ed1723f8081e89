"""Flat key-value experiment configs with JSON values and CLI overrides.

The file format is one dotted key per line::

    # comment
    env.name = "cartpole"
    env.obs_mode = "projection"
    train.k = 0
    experiment.seeds = [0, 1, 2]

Sections map onto the three config dataclasses (env / train / experiment);
values are JSON literals. Overrides use the same dotted keys and win over
file values, so a config file plus a flag list fully determines a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields

import numpy as np

from ..agents.config import ExperimentConfig, TrainConfig
from ..envs import EnvConfig

SECTIONS = ("env", "train", "experiment")


class ConfigError(ValueError):
    pass


def parse_flat_text(text: str) -> dict[str, object]:
    """Parse `dotted.key = json` lines into a flat dict (later lines win)."""
    flat: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key or key.startswith(".") or key.endswith("."):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        try:
            flat[key] = json.loads(value.strip())
        except json.JSONDecodeError as err:
            raise ConfigError(
                f"line {lineno}: value for {key!r} is not valid JSON: {err}"
            ) from None
    return flat


def load_config_file(path: str) -> dict[str, object]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_flat_text(fh.read())


def apply_overrides(flat: dict[str, object],
                    overrides: dict[str, object]) -> dict[str, object]:
    merged = dict(flat)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def nest(flat: dict[str, object]) -> dict[str, dict]:
    """Group dotted keys into per-section nested dicts."""
    nested: dict[str, dict] = {s: {} for s in SECTIONS}
    for key, value in flat.items():
        parts = key.split(".")
        if parts[0] not in SECTIONS or len(parts) < 2:
            raise ConfigError(
                f"key {key!r} must start with one of {SECTIONS} and name a field")
        cursor = nested[parts[0]]
        for part in parts[1:-1]:
            cursor = cursor.setdefault(part, {})
            if not isinstance(cursor, dict):
                raise ConfigError(f"key {key!r} descends into a non-dict value")
        cursor[parts[-1]] = value
    return nested


def _checked_kwargs(cls, kwargs: dict, section: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(kwargs) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown {section} option(s) {unknown}; valid: {sorted(allowed)}")
    return kwargs


@dataclass
class HarnessConfig:
    """The three dataclasses one experiment needs, built from one flat dict."""

    env: EnvConfig
    train: TrainConfig
    experiment: ExperimentConfig
    flat: dict[str, object]

    def digest(self) -> str:
        """Identity of the experiment setup, excluding seed/output plumbing."""
        return flat_digest(self.flat)


def build_configs(flat: dict[str, object]) -> HarnessConfig:
    nested = nest(flat)
    env_kwargs = dict(nested["env"])
    if env_kwargs.get("projection_matrix") is not None:
        env_kwargs["projection_matrix"] = np.asarray(
            env_kwargs["projection_matrix"], dtype=np.float64)
    try:
        env = EnvConfig(**_checked_kwargs(EnvConfig, env_kwargs, "env"))
        train = TrainConfig(**_checked_kwargs(TrainConfig, nested["train"],
                                              "train"))
        experiment = ExperimentConfig(
            **_checked_kwargs(ExperimentConfig, nested["experiment"],
                              "experiment"))
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from None
    return HarnessConfig(env, train, experiment, dict(flat))


# keys that vary across repetitions of the *same* experiment: excluded from
# the grouping digest so the report can pool seeds and refuse anything else
_IDENTITY_EXEMPT = ("train.seed", "train.label", "env.seed",
                    "experiment.seeds", "experiment.out_dir",
                    "experiment.label")


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def flat_digest(flat: dict[str, object]) -> str:
    core = {k: v for k, v in flat.items() if k not in _IDENTITY_EXEMPT}
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()


def format_flat(flat: dict[str, object]) -> str:
    """Canonical round-trippable text form (sorted keys, JSON values)."""
    lines = [f"{key} = {json.dumps(flat[key])}" for key in sorted(flat)]
    return "\n".join(lines) + "\n"
