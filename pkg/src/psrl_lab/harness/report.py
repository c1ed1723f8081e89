"""Aggregation: per-run CSVs -> binned learning curves and summary tables.

Episodes have uneven lengths, so curves are aligned by binning each run's
evaluation points into 100 equal env-step bins (forward-filled) before
averaging across seeds. Everything written here is figure-ready CSV; no
plotting happens in this package.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import flat_digest
from .mse import mse_table_from_manifests, write_mse_csv
from .runner import manifest_paths, read_manifest, read_run_csv

BIN_COUNT = 100


def bin_index(step: int, total_steps: int, bins: int = BIN_COUNT) -> int:
    """Map env step 1..total onto 0..bins-1 with equal-width bins."""
    if step < 1:
        raise ValueError("env steps are 1-based")
    return min(bins - 1, (step * bins - 1) // total_steps)


def bin_eval_curve(rows: list[dict], total_steps: int, value_key: str,
                   bins: int = BIN_COUNT) -> np.ndarray:
    """Per-bin mean of one run's eval points, forward/back-filled.

    Returns an array of length `bins`; all-NaN when the run has no eval
    points carrying `value_key`.
    """
    sums = np.zeros(bins)
    counts = np.zeros(bins)
    for row in rows:
        value = row.get(value_key)
        if row.get("eval_return_mean") is None or value is None:
            continue
        b = bin_index(row["env_step"], total_steps, bins)
        sums[b] += value
        counts[b] += 1
    curve = np.full(bins, np.nan)
    has = counts > 0
    curve[has] = sums[has] / counts[has]
    if not has.any():
        return curve
    # forward-fill gaps, then back-fill the head before the first eval
    last = np.nan
    for i in range(bins):
        if np.isnan(curve[i]):
            curve[i] = last
        else:
            last = curve[i]
    first = curve[~np.isnan(curve)][0]
    curve[np.isnan(curve)] = first
    return curve


def curve_auc(curve: np.ndarray) -> float:
    """Normalized area under the binned curve (mean over bins)."""
    return float(np.mean(curve))


@dataclass
class GroupSummary:
    stem: str
    env: str
    algo: str
    mode: str
    k: int
    seeds: list[int]
    total_steps: int
    return_curves: np.ndarray        # (num_seeds, bins)
    mse_norm_curves: np.ndarray | None
    mse_raw_curves: np.ndarray | None

    @property
    def auc_per_seed(self) -> np.ndarray:
        return np.array([curve_auc(c) for c in self.return_curves])

    @property
    def final_per_seed(self) -> np.ndarray:
        return self.return_curves[:, -1]


def _check_same_digest(manifests: list[dict], paths: list[str]) -> None:
    digests = {flat_digest(m["flat_config"]) for m in manifests}
    if len(digests) > 1:
        raise ValueError(
            "refusing to aggregate runs with different configurations: "
            + ", ".join(sorted(paths)))


def aggregate_group(paths: list[str]) -> GroupSummary:
    """Pool the runs behind one or more same-config manifests."""
    manifests = [read_manifest(p) for p in paths]
    _check_same_digest(manifests, paths)
    head = manifests[0]
    total_steps = head["train"]["env_steps"]
    has_predictor = head["train"]["mode"] != "true_state"

    seeds, ret, mse_n, mse_r = [], [], [], []
    seen = set()
    for manifest, path in zip(manifests, paths):
        for run in manifest["runs"]:
            if run["seed"] in seen:
                raise ValueError(
                    f"{path}: seed {run['seed']} appears in two runs of the "
                    "same configuration")
            seen.add(run["seed"])
            if run["status"] != "ok":
                continue
            rows = read_run_csv(run["csv_path"])
            curve = bin_eval_curve(rows, total_steps, "eval_return_mean")
            if np.isnan(curve).all():
                continue                   # no eval points at all
            seeds.append(run["seed"])
            ret.append(curve)
            if has_predictor:
                mse_n.append(bin_eval_curve(rows, total_steps,
                                            "state_mse_normalized"))
                mse_r.append(bin_eval_curve(rows, total_steps,
                                            "state_mse_raw"))
    if not ret:
        raise ValueError(f"no usable runs under {paths}")
    stem = os.path.basename(paths[0]).replace("_manifest.json", "")
    return GroupSummary(
        stem=stem, env=head["env"]["name"], algo=head["train"]["algo"],
        mode=head["train"]["mode"], k=head["train"]["k"], seeds=seeds,
        total_steps=total_steps, return_curves=np.array(ret),
        mse_norm_curves=np.array(mse_n) if has_predictor else None,
        mse_raw_curves=np.array(mse_r) if has_predictor else None)


def _mean_std(curves: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return curves.mean(axis=0), curves.std(axis=0)


CURVE_SCHEMA_LINE = "# curve-schema 1"
SUMMARY_SCHEMA_LINE = "# summary-schema 1"


def write_curve_csv(path: str, group: GroupSummary) -> None:
    mean, std = _mean_std(group.return_curves)
    mse_cols = group.mse_norm_curves is not None
    if mse_cols:
        mn_mean, _ = _mean_std(group.mse_norm_curves)
        mr_mean, _ = _mean_std(group.mse_raw_curves)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CURVE_SCHEMA_LINE + "\n")
        fh.write("bin,env_step,n_seeds,eval_return_mean,eval_return_std,"
                 "state_mse_norm_mean,state_mse_raw_mean\n")
        n = len(group.seeds)
        for b in range(BIN_COUNT):
            step = (b + 1) * group.total_steps // BIN_COUNT
            cells = [str(b), str(step), str(n), repr(float(mean[b])),
                     repr(float(std[b]))]
            if mse_cols:
                cells += [repr(float(mn_mean[b])), repr(float(mr_mean[b]))]
            else:
                cells += ["", ""]
            fh.write(",".join(cells) + "\n")


def write_summary_csv(path: str, groups: list[GroupSummary]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_SCHEMA_LINE + "\n")
        fh.write("stem,env,algo,mode,K,n_seeds,final_return_mean,"
                 "final_return_std,auc_mean,auc_std\n")
        for g in sorted(groups, key=lambda g: g.stem):
            final = g.final_per_seed
            auc = g.auc_per_seed
            fh.write(f"{g.stem},{g.env},{g.algo},{g.mode},{g.k},"
                     f"{len(g.seeds)},{float(final.mean())!r},"
                     f"{float(final.std())!r},{float(auc.mean())!r},"
                     f"{float(auc.std())!r}\n")


def write_report(in_dir: str, out_dir: str, heldout_episodes: int = 20,
                 include_mse_table: bool = True) -> dict:
    """Aggregate every manifest under in_dir into figure-ready CSVs."""
    paths = manifest_paths(in_dir)
    if not paths:
        raise ValueError(f"no run manifests found under {in_dir!r}")
    os.makedirs(out_dir, exist_ok=True)

    by_digest: dict[str, list[str]] = {}
    for path in paths:
        digest = flat_digest(read_manifest(path)["flat_config"])
        by_digest.setdefault(digest, []).append(path)

    groups = [aggregate_group(group_paths)
              for group_paths in by_digest.values()]
    files = {}
    for group in groups:
        curve_path = os.path.join(out_dir, f"curve_{group.stem}.csv")
        write_curve_csv(curve_path, group)
        files[f"curve_{group.stem}"] = curve_path

    summary_path = os.path.join(out_dir, "summary.csv")
    write_summary_csv(summary_path, groups)
    files["summary"] = summary_path

    if include_mse_table:
        scoreable = [p for p in paths
                     if read_manifest(p)["train"]["mode"] != "true_state"]
        if scoreable:
            rows = mse_table_from_manifests(scoreable,
                                            episodes=heldout_episodes)
            mse_path = os.path.join(out_dir, "mse_table.csv")
            write_mse_csv(mse_path, rows)
            files["mse_table"] = mse_path

    index = {
        "groups": [
            {"stem": g.stem, "env": g.env, "algo": g.algo, "mode": g.mode,
             "K": g.k, "seeds": g.seeds, "total_steps": g.total_steps}
            for g in sorted(groups, key=lambda g: g.stem)],
        "files": {k: os.path.basename(v) for k, v in sorted(files.items())},
    }
    index_path = os.path.join(out_dir, "report_index.json")
    with open(index_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(index, sort_keys=True, indent=2) + "\n")
    files["index"] = index_path
    return files
