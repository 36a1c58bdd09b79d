#!/usr/bin/env python3
"""Regenerate every experiment CSV (fig3 ... fig9) with default settings.

Usage: python scripts/run_all_experiments.py [OUT_DIR] [--jobs N]
Roughly 40 minutes of compute on a single core at the default scan axes.
"""
import argparse
import os
import sys
import time

from rasesim import cli


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("out_dir", nargs="?", default="results")
    p.add_argument("--jobs", type=int, default=0)
    args = p.parse_args()

    for name in ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"):
        start = time.time()
        argv = ["--experiment", name, "--out", args.out_dir]
        if args.jobs:
            argv += ["--jobs", str(args.jobs)]
        code = cli.main(argv)
        if code != 0:
            print(f"{name} failed with exit status {code}", file=sys.stderr)
            return code
        print(f"{name}: {time.time() - start:.0f} s", file=sys.stderr)
    print(f"all experiments written to {os.path.abspath(args.out_dir)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
