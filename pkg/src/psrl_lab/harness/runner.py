"""Deterministic experiment execution and artifact persistence.

One experiment = one (env config, train config) pair swept over seeds.
Each seed produces a CSV of per-episode/per-eval rows and a serialized
policy bundle; the experiment produces one manifest tying them together.
Every output byte is a pure function of the configuration.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from ..agents import TrainingDiverged, train
from ..agents.bundle import save_bundle
from ..agents.train import EVAL_SEED_BASE, RunRecord
from ..envs import make_env
from .config import HarnessConfig, canonical_json

RUN_SCHEMA_VERSION = 1
SCHEMA_LINE = f"# run-schema {RUN_SCHEMA_VERSION}"
CSV_COLUMNS = ("run_id", "seed", "mode", "K", "episode", "env_step",
               "episode_return", "eval_return_mean", "epsilon",
               "state_mse_normalized", "state_mse_raw")

# seed-domain layout: training resets draw below EVAL_SEED_BASE, in-training
# evaluation sits just above it, and held-out trajectory collection for the
# interpretability table starts another billion up — structurally disjoint
HELDOUT_SEED_BASE = EVAL_SEED_BASE + 1_000_000_000


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_rows(run_id: str, seed: int, mode: str, k: int,
                    records: list[RunRecord]) -> list[tuple]:
    rows = []
    for r in records:
        rows.append((run_id, seed, mode, k, r.episode, r.env_step,
                     r.episode_return, r.eval_return_mean, r.epsilon,
                     r.state_mse_normalized, r.state_mse_raw))
    return rows


def write_run_csv(path: str, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SCHEMA_LINE + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def read_run_csv(path: str) -> list[dict]:
    """Parse a run CSV back into typed row dicts (schema-checked)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# run-schema"):
        raise ValueError(f"{path}: missing schema line")
    version = lines[0].split()[-1]
    if version != str(RUN_SCHEMA_VERSION):
        raise ValueError(
            f"{path}: unsupported run-schema {version!r} "
            f"(this reader handles {RUN_SCHEMA_VERSION})")
    if len(lines) < 2 or tuple(lines[1].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path}: header does not match {CSV_COLUMNS}")
    ints = {"seed", "K", "episode", "env_step"}
    floats = {"episode_return", "eval_return_mean", "epsilon",
              "state_mse_normalized", "state_mse_raw"}
    rows = []
    for line in lines[2:]:
        if not line:
            continue
        cells = line.split(",")
        row: dict = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                row[name] = None
            elif name in ints:
                row[name] = int(cell)
            elif name in floats:
                row[name] = float(cell)
            else:
                row[name] = cell
        rows.append(row)
    return rows


@dataclass
class RunOutcome:
    seed: int
    csv_path: str
    bundle_path: str
    status: str                  # "ok" | "diverged_at_step_N"
    env_steps: int


@dataclass
class ExperimentResult:
    out_dir: str
    manifest_path: str
    outcomes: list[RunOutcome]

    @property
    def csv_paths(self) -> list[str]:
        return [o.csv_path for o in self.outcomes]


def _experiment_stem(cfg: HarnessConfig) -> str:
    label = cfg.experiment.label
    return f"{label}_{cfg.train.mode}_k{cfg.train.k}"


def run_experiment(cfg: HarnessConfig, progress=None) -> ExperimentResult:
    """Train every seed, persist CSVs/bundles/manifest, return the paths.

    A NaN abort mid-run still flushes the partial CSV and a diagnostic
    bundle; the manifest records the failure and the sweep continues.
    """
    out_dir = cfg.experiment.out_dir
    os.makedirs(out_dir, exist_ok=True)
    stem = _experiment_stem(cfg)
    outcomes: list[RunOutcome] = []

    for seed in cfg.experiment.seeds:
        train_cfg = dataclasses.replace(cfg.train, seed=seed)
        env = make_env(cfg.env)
        run_id = f"{stem}-s{seed}"
        csv_path = os.path.join(out_dir, f"{stem}_s{seed}.csv")
        bundle_path = os.path.join(out_dir, f"{stem}_s{seed}.bundle")
        try:
            bundle, records = train(
                env, train_cfg,
                eval_cadence=cfg.experiment.eval_cadence,
                eval_episodes=cfg.experiment.eval_episodes)
            status = "ok"
        except TrainingDiverged as err:
            bundle, records = err.bundle, err.records
            status = f"diverged_at_step_{err.step}"
        steps = records[-1].env_step if records else 0
        write_run_csv(csv_path, records_to_rows(
            run_id, seed, train_cfg.mode, train_cfg.k, records))
        save_bundle(bundle, bundle_path)
        outcomes.append(RunOutcome(seed, csv_path, bundle_path, status, steps))
        if progress is not None:
            progress(f"{run_id}: {status} ({steps} env steps)")

    manifest_path = os.path.join(out_dir, f"{stem}_manifest.json")
    write_manifest(manifest_path, cfg, outcomes)
    return ExperimentResult(out_dir, manifest_path, outcomes)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_manifest(path: str, cfg: HarnessConfig,
                   outcomes: list[RunOutcome]) -> None:
    manifest = {
        "schema_version": RUN_SCHEMA_VERSION,
        "config_digest": cfg.digest(),
        "flat_config": cfg.flat,
        "env": {k: _jsonable(v)
                for k, v in dataclasses.asdict(cfg.env).items()},
        "train": {k: _jsonable(v)
                  for k, v in dataclasses.asdict(cfg.train).items()},
        "experiment": dataclasses.asdict(cfg.experiment),
        "seed_domains": {
            "training_resets": [0, EVAL_SEED_BASE],
            "evaluation_base": EVAL_SEED_BASE,
            "heldout_base": HELDOUT_SEED_BASE,
        },
        "runs": [dataclasses.asdict(o) for o in outcomes],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def read_manifest(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    version = manifest.get("schema_version")
    if version != RUN_SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported manifest schema {version!r}")
    return manifest


def assert_heldout_disjoint(manifest: dict) -> None:
    """The leakage guard: held-out seeds must sit above every training seed."""
    domains = manifest["seed_domains"]
    lo, hi = domains["training_resets"]
    if not domains["heldout_base"] >= hi:
        raise AssertionError(
            "held-out seed base overlaps the training reset domain: "
            f"{domains}")


def manifest_paths(in_dir: str) -> list[str]:
    names = sorted(os.listdir(in_dir))
    return [os.path.join(in_dir, n) for n in names
            if n.endswith("_manifest.json")]
