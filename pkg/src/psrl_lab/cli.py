"""Command-line front end: train, ablate, verify-theory, gradcheck, report.

All output (stdout and files) is a pure function of the arguments — no
timestamps, no machine identifiers — so identical invocations are byte-
identical end to end.
"""

from __future__ import annotations

import argparse
import sys

from .harness.config import apply_overrides, build_configs, load_config_file
from .harness.presets import desk_flat
from .harness.report import write_report
from .harness.runner import run_experiment


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--preset",
                   help="desk-scale preset env name (alternative to --config)")
    p.add_argument("--env", help="override env.name")
    p.add_argument("--mode", help="override train.mode")
    p.add_argument("--k", type=int, help="override train.k")
    p.add_argument("--beta", type=float, help="override train.beta")
    p.add_argument("--seed", type=int,
                   help="run a single seed (overrides experiment.seeds)")
    p.add_argument("--steps", type=int, help="override train.env_steps")
    p.add_argument("--out", help="override experiment.out_dir")


def _flat_from_args(args: argparse.Namespace) -> dict[str, object]:
    if args.config:
        flat = load_config_file(args.config)
    elif args.preset:
        flat = desk_flat(args.preset)
    else:
        raise SystemExit("one of --config or --preset is required")
    overrides: dict[str, object] = {
        "env.name": args.env,
        "train.mode": args.mode,
        "train.k": args.k,
        "train.beta": args.beta,
        "train.env_steps": args.steps,
        "experiment.out_dir": args.out,
    }
    if args.seed is not None:
        overrides["experiment.seeds"] = [args.seed]
    return apply_overrides(flat, overrides)


def _cmd_train(args: argparse.Namespace) -> int:
    flat = _flat_from_args(args)
    cfg = build_configs(flat)
    result = run_experiment(cfg, progress=print)
    print(f"manifest: {result.manifest_path}")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    flat = _flat_from_args(args)
    mode = {"repr": "repr_first", "policy": "policy_first"}[args.order]
    flat = apply_overrides(flat, {
        "train.mode": mode,
        "train.pretrain_frac": args.pretrain_frac,
    })
    cfg = build_configs(flat)
    result = run_experiment(cfg, progress=print)
    print(f"manifest: {result.manifest_path}")
    return 0


def _cmd_verify_theory(args: argparse.Namespace) -> int:
    from .theory import run_suite

    result = run_suite(seed=args.seed, num_mdps=args.mdps)
    print(f"verified {result.num_mdps} random MDPs (seed {result.seed})")
    # summary_lines()[0] carries wall-clock timing; everything after is
    # deterministic, which the byte-identical-output contract requires
    for line in result.summary_lines()[1:]:
        print(line)
    print("RESULT: " + ("PASS" if result.passed else "FAIL"))
    return 0 if result.passed else 1


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    from .agents import audit_gradients

    result = audit_gradients(seeds=args.seeds, tolerance=args.tolerance,
                             include_conv=not args.no_conv)
    for line in result.summary_lines():
        print(line)
    print(f"max relative error: {result.max_rel_error:.3e}")
    print("RESULT: " + ("PASS" if result.passed else "FAIL"))
    return 0 if result.passed else 1


def _cmd_report(args: argparse.Namespace) -> int:
    files = write_report(args.in_dir, args.out_dir,
                         heldout_episodes=args.heldout_episodes,
                         include_mse_table=not args.no_mse_table)
    for name in sorted(files):
        print(f"{name}: {files[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psrl-lab",
        description="Partially supervised RL: experiments and verification")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training experiment")
    _add_train_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_ablate = sub.add_parser("ablate", help="run a staged-training ablation")
    _add_train_flags(p_ablate)
    p_ablate.add_argument("--order", choices=("repr", "policy"), required=True,
                          help="which part is pretrained first")
    p_ablate.add_argument("--pretrain-frac", type=float, default=0.25,
                          help="fraction of the step budget spent in phase 1")
    p_ablate.set_defaults(func=_cmd_ablate)

    p_theory = sub.add_parser("verify-theory",
                              help="certify the estimation bounds on random MDPs")
    p_theory.add_argument("--mdps", type=int, default=1000)
    p_theory.add_argument("--seed", type=int, default=0)
    p_theory.set_defaults(func=_cmd_verify_theory)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference audit of every loss gradient")
    p_grad.add_argument("--seeds", type=int, default=10)
    p_grad.add_argument("--tolerance", type=float, default=1e-4)
    p_grad.add_argument("--no-conv", action="store_true",
                        help="skip the (slow) conv-trunk scenario")
    p_grad.set_defaults(func=_cmd_gradcheck)

    p_report = sub.add_parser("report", help="aggregate run CSVs into figures")
    p_report.add_argument("--in", dest="in_dir", required=True)
    p_report.add_argument("--out", dest="out_dir", required=True)
    p_report.add_argument("--heldout-episodes", type=int, default=20)
    p_report.add_argument("--no-mse-table", action="store_true")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
