"""Experiment orchestration: configs, seeded runs, persistence, reports."""

from .config import (ConfigError, HarnessConfig, apply_overrides,
                     build_configs, flat_digest, format_flat,
                     load_config_file, parse_flat_text)
from .mse import (MseRow, collect_heldout, heldout_mse, linear_refit_mse_raw,
                  mse_table_from_manifests, predictor_mse_raw, write_mse_csv)
from .presets import DESK_PAIRS, desk_config, desk_flat
from .report import (BIN_COUNT, GroupSummary, aggregate_group, bin_eval_curve,
                     bin_index, curve_auc, write_report)
from .runner import (CSV_COLUMNS, HELDOUT_SEED_BASE, RUN_SCHEMA_VERSION,
                     ExperimentResult, RunOutcome, assert_heldout_disjoint,
                     manifest_paths, read_manifest, read_run_csv,
                     run_experiment, write_run_csv)

__all__ = [
    "BIN_COUNT", "CSV_COLUMNS", "ConfigError", "DESK_PAIRS",
    "ExperimentResult", "GroupSummary", "HELDOUT_SEED_BASE", "HarnessConfig",
    "MseRow", "RUN_SCHEMA_VERSION", "RunOutcome", "aggregate_group",
    "apply_overrides", "assert_heldout_disjoint", "bin_eval_curve",
    "bin_index", "build_configs", "collect_heldout", "curve_auc",
    "desk_config", "desk_flat", "flat_digest", "format_flat", "heldout_mse",
    "linear_refit_mse_raw", "load_config_file", "manifest_paths",
    "mse_table_from_manifests", "parse_flat_text", "predictor_mse_raw",
    "read_manifest", "read_run_csv", "run_experiment", "write_mse_csv",
    "write_report", "write_run_csv",
]
