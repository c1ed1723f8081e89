"""Run the desk-scale benchmark: five (env, algorithm) pairs x modes x seeds.

Every pair uses the same observation lift (random projection to 32 dims,
sigma 0.05) so the supervised-signal comparison is apples-to-apples.
Expect roughly half an hour on one core for the full sweep.
"""

import argparse

from psrl_lab.harness import DESK_PAIRS, desk_config, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--envs", nargs="*", default=[p[0] for p in DESK_PAIRS])
    ap.add_argument("--modes", nargs="*", default=["psrl", "e2e"])
    ap.add_argument("--seeds", nargs="*", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--steps", type=int, default=None,
                    help="override the per-env step budget (smoke runs)")
    ap.add_argument("--out", default="results/desk")
    args = ap.parse_args()

    overrides = {}
    if args.steps is not None:
        overrides["train.env_steps"] = args.steps
    for env_name in args.envs:
        for mode in args.modes:
            cfg = desk_config(env_name, mode=mode, seeds=tuple(args.seeds),
                              out_dir=args.out, overrides=overrides)
            run_experiment(cfg, progress=print)


if __name__ == "__main__":
    main()
