"""Staged-training ablations: pretrain one part, freeze it, train the rest.

policy-first pretrains the policy on the true state and then fits the
state predictor afterwards; repr-first pretrains the predictor and then
does RL through the frozen embedding. Compare against the jointly trained
runs from run_desk_scale.py.
"""

import argparse

from psrl_lab.harness import apply_overrides, desk_flat, build_configs, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--envs", nargs="*", default=["cartpole", "acrobot"])
    ap.add_argument("--order", choices=("repr", "policy"), default="policy")
    ap.add_argument("--fracs", nargs="*", type=float, default=[0.1, 0.25, 0.5])
    ap.add_argument("--seeds", nargs="*", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--out", default="results/ablations")
    args = ap.parse_args()

    mode = {"repr": "repr_first", "policy": "policy_first"}[args.order]
    for env_name in args.envs:
        for frac in args.fracs:
            flat = desk_flat(env_name, mode=mode, seeds=tuple(args.seeds),
                             out_dir=args.out)
            flat = apply_overrides(flat, {
                "train.pretrain_frac": frac,
                # tag the artifacts so the sweep's manifests do not collide
                "experiment.label": f"{env_name}_f{int(round(frac * 100)):02d}",
            })
            if args.steps is not None:
                flat = apply_overrides(flat, {"train.env_steps": args.steps})
            run_experiment(build_configs(flat), progress=print)


if __name__ == "__main__":
    main()
