"""Aggregate run directories into figure-ready CSVs and the MSE table."""

import argparse

from psrl_lab.harness import write_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="in_dir", default="results/desk")
    ap.add_argument("--out", dest="out_dir", default="results/report")
    ap.add_argument("--heldout-episodes", type=int, default=20)
    ap.add_argument("--no-mse-table", action="store_true")
    args = ap.parse_args()

    files = write_report(args.in_dir, args.out_dir,
                         heldout_episodes=args.heldout_episodes,
                         include_mse_table=not args.no_mse_table)
    for name in sorted(files):
        print(f"{name}: {files[name]}")


if __name__ == "__main__":
    main()
